use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discovery::GraphQuality;
use crate::error::{Error, Result};
use crate::io::write_atomic;

pub(crate) const NA: &str = "NA";

/// One metric value for one strategy in one (train size, iteration) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub strategy: String,
    pub ordering: String,
    pub train_size: usize,
    pub iteration: usize,
    pub metric: String,
    /// `None` when the metric could not be computed.
    pub value: Option<f64>,
    /// Fingerprint of the training table the strategy consumed.
    pub train_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphQualityRecord {
    pub dataset: String,
    pub strategy: String,
    pub train_size: usize,
    pub iteration: usize,
    pub quality: GraphQuality,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

const RECORD_HEADER: [&str; 8] = [
    "dataset",
    "strategy",
    "ordering",
    "train_size",
    "iteration",
    "metric",
    "value",
    "train_hash",
];

pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.dataset.clone(),
            r.strategy.clone(),
            r.ordering.clone(),
            r.train_size.to_string(),
            r.iteration.to_string(),
            r.metric.clone(),
            cell(r.value),
            r.train_hash.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RECORD_HEADER {
        return Err(Error::InvalidInput(format!(
            "{}: not a records file (header {header:?})",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let num = |k: usize| -> Result<usize> {
            row[k].parse().map_err(|_| Error::InvalidInput(format!("row {}: bad integer {:?}", i + 1, &row[k])))
        };
        let value = match &row[6] {
            NA => None,
            v => Some(
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("row {}: bad value {v:?}", i + 1)))?,
            ),
        };
        out.push(RunRecord {
            dataset: row[0].to_string(),
            strategy: row[1].to_string(),
            ordering: row[2].to_string(),
            train_size: num(3)?,
            iteration: num(4)?,
            metric: row[5].to_string(),
            value,
            train_hash: row[7].to_string(),
        });
    }
    Ok(out)
}

pub fn write_graph_quality(path: &Path, records: &[GraphQualityRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "strategy",
        "train_size",
        "iteration",
        "skeleton_recall",
        "direction_recall",
        "oriented_fraction",
        "direction_precision",
    ])?;
    for r in records {
        let q = r.quality;
        w.write_record([
            r.dataset.clone(),
            r.strategy.clone(),
            r.train_size.to_string(),
            r.iteration.to_string(),
            cell(q.skeleton_recall),
            cell(q.direction_recall),
            cell(q.oriented_fraction),
            cell(q.direction_precision),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}
