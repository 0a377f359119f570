//! Mixed-type tables.
//!
//! A [`Table`] is column-major. Numeric cells hold their value; categorical
//! cells hold the category index as an `f64` (exact for any realistic
//! category count), which lets samplers and metrics share one storage type.

mod csvio;
mod split;

use std::collections::HashSet;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csvio::{load_schema, load_table, read_table, save_schema, save_table, write_table};
pub use split::{fixed_split, SplitSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub categories: Vec<String>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

pub fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let mut names = HashSet::new();
    for col in schema {
        if !names.insert(col.name.as_str()) {
            return Err(Error::Schema(format!("duplicate column name {:?}", col.name)));
        }
        match col.kind {
            ColumnKind::Numeric if !col.categories.is_empty() => {
                return Err(Error::Schema(format!(
                    "numeric column {:?} lists categories",
                    col.name
                )));
            }
            ColumnKind::Categorical => {
                if col.categories.is_empty() {
                    return Err(Error::Schema(format!(
                        "categorical column {:?} has no categories",
                        col.name
                    )));
                }
                let mut seen = HashSet::new();
                if let Some(dup) = col.categories.iter().find(|c| !seen.insert(c.as_str())) {
                    return Err(Error::Schema(format!(
                        "duplicate category {dup:?} in column {:?}",
                        col.name
                    )));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    schema: Vec<ColumnSchema>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl Table {
    /// Build a table from columns, checking rectangularity, finiteness and
    /// category ranges.
    pub fn new(schema: Vec<ColumnSchema>, columns: Vec<Vec<f64>>) -> Result<Self> {
        validate_schema(&schema)?;
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} schema entries for {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (col, values) in schema.iter().zip(&columns) {
            if values.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column {:?} has {} rows, expected {n_rows}",
                    col.name,
                    values.len()
                )));
            }
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Schema(format!(
                    "non-finite value {bad} in column {:?}",
                    col.name
                )));
            }
            if col.is_categorical() {
                let k = col.n_categories() as f64;
                if let Some(bad) = values
                    .iter()
                    .find(|&&v| v < 0.0 || v >= k || v.fract() != 0.0)
                {
                    return Err(Error::Schema(format!(
                        "category index {bad} out of range for column {:?}",
                        col.name
                    )));
                }
            }
        }
        Ok(Self {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.schema.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index_of(name)?])
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Table {
            schema: self.schema.clone(),
            columns,
            n_rows: rows.len(),
        }
    }

    /// Stack `other` below `self`; schemas must be identical.
    pub fn concat(&self, other: &Table) -> Result<Table> {
        if self.schema != other.schema {
            return Err(Error::Schema("cannot concatenate tables with different schemas".into()));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.iter().chain(b).copied().collect())
            .collect();
        Ok(Table {
            schema: self.schema.clone(),
            columns,
            n_rows: self.n_rows + other.n_rows,
        })
    }

    /// Permute columns (and schema) into `order`, which must be a
    /// permutation of the column names.
    pub fn reorder_columns<S: AsRef<str>>(&self, order: &[S]) -> Result<Table> {
        let mut seen = vec![false; self.n_cols()];
        let mut idx = Vec::with_capacity(order.len());
        for name in order {
            let name = name.as_ref();
            let i = self
                .index_of(name)
                .map_err(|_| Error::NotAPermutation(format!("unknown column {name:?}")))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::NotAPermutation(format!("column {name:?} repeated")));
            }
            idx.push(i);
        }
        if idx.len() != self.n_cols() {
            return Err(Error::NotAPermutation(format!(
                "{} names given for {} columns",
                idx.len(),
                self.n_cols()
            )));
        }
        Ok(Table {
            schema: idx.iter().map(|&i| self.schema[i].clone()).collect(),
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            n_rows: self.n_rows,
        })
    }

    /// Stable content hash (schema and exact cell bits).
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.schema.hash(&mut h);
        self.n_rows.hash(&mut h);
        for c in &self.columns {
            for v in c {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}
