//! Cell aggregation: mean and standard error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RunRecord, RunnerError};
use crate::logics::Logic;
use crate::paradigms::Condition;

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        carry += if f64::abs(sum) >= f64::abs(v) { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Mean and standard error (sample sd / sqrt(n)), two compensated passes
/// with the usual correction term on the squared deviations. A single value
/// has a standard error of zero.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64), RunnerError> {
    if values.is_empty() {
        return Err(RunnerError::EmptyCell);
    }
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() == 1 {
        tracing::warn!("cell has a single value; standard error set to 0");
        return Ok((mean, 0.0));
    }
    let drift = compensated_sum(values.iter().map(|v| v - mean));
    let squares = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let variance = ((squares - drift * drift / n) / (n - 1.0)).max(0.0);
    Ok((mean, (variance / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub logic: Logic,
    pub condition: Condition,
    pub metric: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: CellId,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub values: Vec<f64>,
}

/// One summary per (logic, condition, metric) present in the records, with
/// records taken in seed order.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<CellSummary>, RunnerError> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.logic, r.condition, r.seed));
    let mut cells: BTreeMap<CellId, Vec<f64>> = BTreeMap::new();
    for record in sorted {
        let metrics = record.metrics();
        for name in record.experiment.metrics() {
            if let Some(v) = metrics.get(name) {
                let id = CellId {
                    logic: record.logic,
                    condition: record.condition,
                    metric: name.to_string(),
                };
                cells.entry(id).or_default().push(*v);
            }
        }
    }
    cells
        .into_iter()
        .map(|(cell, values)| {
            let (mean, se) = aggregate(&values)?;
            Ok(CellSummary {
                cell,
                n: values.len(),
                mean,
                se,
                values,
            })
        })
        .collect()
}
