use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Table;
use crate::error::{Error, Result};
use crate::seed::{self, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_size: usize,
    pub train_size: usize,
    pub master_seed: u64,
    pub iteration: u64,
}

/// Draw a fixed test set from `master_seed` alone, then a training set from
/// the remaining rows with a per-iteration seed. The test rows are identical
/// for every iteration; train and test never overlap.
pub fn fixed_split(pool: &Table, spec: &SplitSpec) -> Result<(Table, Table)> {
    let needed = spec.test_size + spec.train_size;
    if needed > pool.n_rows() {
        return Err(Error::InsufficientRows {
            needed,
            available: pool.n_rows(),
        });
    }
    let mut rows: Vec<usize> = (0..pool.n_rows()).collect();
    rows.shuffle(&mut seed::rng_at(spec.master_seed, &[tag::TEST_SPLIT]));
    let (test_rows, rest) = rows.split_at(spec.test_size);
    let mut rest = rest.to_vec();
    rest.sort_unstable();
    rest.shuffle(&mut seed::rng_at(
        spec.master_seed,
        &[tag::TRAIN_SPLIT, spec.iteration],
    ));
    let train = pool.select_rows(&rest[..spec.train_size]);
    let test = pool.select_rows(test_rows);
    Ok((train, test))
}
