use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::config::{Comparison, HolmFamily};
use super::records::RunRecord;
use crate::error::{Error, Result};
use crate::par;
use crate::seed::{derive, tag};
use crate::stats::{compare_paired, holm_adjust, median, median_range_ci, sensitivity_range, ComparisonResult, ALPHA};

/// Resamples behind the median-range interval.
pub const SENSITIVITY_RESAMPLES: usize = 1000;

/// Paired comparison of strategy `a` against `b` (differences `a - b`)
/// at one train size and metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub train_size: usize,
    pub metric: String,
    pub a: String,
    pub b: String,
    /// Iterations dropped because either side is missing.
    pub n_excluded: usize,
    /// `None` when no complete pair remains.
    pub result: Option<ComparisonResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCell {
    pub dataset: String,
    pub train_size: usize,
    pub metric: String,
    pub median_range: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_iterations: usize,
}

type CellKey = (String, usize, String);

/// (dataset, train size, metric) -> strategy -> iteration -> (value, hash).
type Index<'a> = BTreeMap<CellKey, HashMap<&'a str, BTreeMap<usize, (Option<f64>, &'a str)>>>;

fn index(records: &[RunRecord]) -> Index<'_> {
    let mut idx: Index<'_> = BTreeMap::new();
    for r in records {
        idx.entry((r.dataset.clone(), r.train_size, r.metric.clone()))
            .or_default()
            .entry(r.strategy.as_str())
            .or_default()
            .insert(r.iteration, (r.value, r.train_hash.as_str()));
    }
    idx
}

/// Metrics compared between strategies. Signed correlations and raw ATE
/// estimates are reported but not tested; their absolute or error
/// counterparts are.
fn is_compared(metric: &str) -> bool {
    !metric.starts_with("rho:") && metric != "ate"
}

/// Pairs iterations of `a` and `b`, checks that both saw the same training
/// draw, and runs the paired test. Holm adjustment follows `family`.
pub fn aggregate_and_compare(
    records: &[RunRecord],
    comparisons: &[Comparison],
    family: HolmFamily,
    master_seed: u64,
) -> Result<Vec<ComparisonRow>> {
    let idx = index(records);
    let mut jobs = Vec::new();
    for (key, by_strategy) in &idx {
        if !is_compared(&key.2) {
            continue;
        }
        for c in comparisons {
            let (Some(a), Some(b)) = (by_strategy.get(c.a.as_str()), by_strategy.get(c.b.as_str())) else {
                continue;
            };
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut excluded = 0;
            for (it, (va, ha)) in a {
                let Some((vb, hb)) = b.get(it) else {
                    return Err(Error::Unpaired(format!(
                        "{} has iteration {it} at N={} but {} does not",
                        c.a, key.1, c.b
                    )));
                };
                if ha != hb {
                    return Err(Error::Unpaired(format!(
                        "{} and {} trained on different data at N={}, iteration {it}",
                        c.a, c.b, key.1
                    )));
                }
                match (va, vb) {
                    (Some(x), Some(y)) => {
                        xs.push(*x);
                        ys.push(*y);
                    }
                    _ => excluded += 1,
                }
            }
            if b.len() != a.len() {
                return Err(Error::Unpaired(format!(
                    "{} and {} have different iteration counts at N={}",
                    c.a, c.b, key.1
                )));
            }
            jobs.push((key.clone(), c.clone(), xs, ys, excluded));
        }
    }
    let mut rows = par::map_range(jobs.len(), |j| {
        let ((dataset, train_size, metric), c, xs, ys, excluded) = &jobs[j];
        let result = if xs.is_empty() {
            None
        } else {
            compare_paired(xs, ys, derive(master_seed, &[tag::BOOTSTRAP, j as u64])).ok()
        };
        ComparisonRow {
            dataset: dataset.clone(),
            train_size: *train_size,
            metric: metric.clone(),
            a: c.a.clone(),
            b: c.b.clone(),
            n_excluded: *excluded,
            result,
        }
    });
    apply_holm(&mut rows, family);
    Ok(rows)
}

fn apply_holm(rows: &mut [ComparisonRow], family: HolmFamily) {
    let family_key = |r: &ComparisonRow| -> String {
        match family {
            HolmFamily::Cell => format!("{}\u{0}{}\u{0}{}\u{0}{}\u{0}{}", r.dataset, r.train_size, r.metric, r.a, r.b),
            HolmFamily::MetricComparison => format!("{}\u{0}{}\u{0}{}", r.metric, r.a, r.b),
            HolmFamily::Metric => r.metric.clone(),
            HolmFamily::All => String::new(),
        }
    };
    let mut groups: BTreeMap<String, Vec<&mut ComparisonResult>> = BTreeMap::new();
    let keys: Vec<String> = rows.iter().map(family_key).collect();
    for (row, key) in rows.iter_mut().zip(keys) {
        if let Some(res) = row.result.as_mut() {
            groups.entry(key).or_default().push(res);
        }
    }
    for group in groups.values_mut() {
        holm_adjust(group);
    }
}

/// Per-iteration range of a metric across the three orderings, summarised
/// by its median with a bootstrap interval. Iterations with a missing value
/// are skipped.
pub fn sensitivity_from_records(records: &[RunRecord], labels: [&str; 3], master_seed: u64) -> Vec<SensitivityCell> {
    let idx = index(records);
    let mut cells = Vec::new();
    for (j, ((dataset, train_size, metric), by_strategy)) in idx.iter().enumerate() {
        if metric.starts_with("rho:") {
            continue;
        }
        let Some(series) = labels.iter().map(|l| by_strategy.get(l)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let ranges: Vec<f64> = series[0]
            .iter()
            .filter_map(|(it, (v0, _))| {
                let v1 = series[1].get(it)?.0?;
                let v2 = series[2].get(it)?.0?;
                Some(sensitivity_range(&[(*v0)?, v1, v2]))
            })
            .collect();
        if ranges.is_empty() {
            continue;
        }
        let seed = derive(master_seed, &[tag::BOOTSTRAP, u64::MAX - j as u64]);
        let (ci_low, ci_high) = median_range_ci(&ranges, SENSITIVITY_RESAMPLES, ALPHA, seed)
            .expect("ranges are non-empty");
        cells.push(SensitivityCell {
            dataset: dataset.clone(),
            train_size: *train_size,
            metric: metric.clone(),
            median_range: median(&ranges),
            ci_low,
            ci_high,
            n_iterations: ranges.len(),
        });
    }
    cells
}

/// Runs the three vanilla orderings of `cfg` and summarises their spread.
pub fn run_sensitivity(cfg: &super::ExperimentConfig) -> Result<Vec<SensitivityCell>> {
    use super::config::Ordering;
    use crate::graph::Strategy;
    let find = |o: Ordering| {
        cfg.strategies
            .iter()
            .find(|s| s.strategy == Strategy::Vanilla && s.ordering == o)
            .map(|s| s.label.clone())
            .ok_or_else(|| Error::Config(format!("sensitivity needs a vanilla strategy with ordering {o}")))
    };
    let labels = [find(Ordering::Original)?, find(Ordering::Topological)?, find(Ordering::Reverse)?];
    let out = super::run_quality_experiment(cfg)?;
    Ok(sensitivity_from_records(
        &out.records,
        [&labels[0], &labels[1], &labels[2]],
        cfg.master_seed,
    ))
}
