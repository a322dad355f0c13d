use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::Method;

/// Method every relative gap is measured against.
pub const METRICS_BASELINE: Method = Method::SpHops;

/// Results within this relative distance of the best count as the best.
const BEST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("instance {0}: no result for the baseline method sp-hops")]
    BaselineMissing(usize),
}

/// `value / baseline − 1`.
pub fn rel_gap(value: f64, baseline: f64) -> f64 {
    value / baseline - 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodMetrics {
    pub method: Method,
    pub instances: usize,
    pub feasible: usize,
    /// Mean gap to the hop-count shortest path, over instances where both
    /// are feasible.
    pub mean_gap_shortest_path: Option<f64>,
    /// Mean gap to the virtual best, over instances where the method is
    /// feasible.
    pub mean_gap_best: Option<f64>,
    /// Instances where the method attains the virtual best.
    pub best_count: usize,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Aggregates per-instance objectives (`None` when infeasible) into gap
/// statistics per method.
pub fn metrics(
    instances: &[BTreeMap<Method, Option<f64>>],
) -> Result<Vec<MethodMetrics>, MetricsError> {
    let mut gaps_sp: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    let mut gaps_best: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    let mut counts: BTreeMap<Method, (usize, usize, usize)> = BTreeMap::new();
    for (i, results) in instances.iter().enumerate() {
        let baseline = *results
            .get(&METRICS_BASELINE)
            .ok_or(MetricsError::BaselineMissing(i))?;
        let best = results
            .values()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        for (&m, &value) in results {
            let c = counts.entry(m).or_default();
            c.0 += 1;
            let Some(v) = value else { continue };
            c.1 += 1;
            if v <= best + BEST_TOLERANCE * best.abs() {
                c.2 += 1;
            }
            gaps_best.entry(m).or_default().push(rel_gap(v, best));
            if let Some(b) = baseline {
                gaps_sp.entry(m).or_default().push(rel_gap(v, b));
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|(method, (instances, feasible, best_count))| MethodMetrics {
            method,
            instances,
            feasible,
            mean_gap_shortest_path: gaps_sp.get(&method).and_then(|g| mean(g)),
            mean_gap_best: gaps_best.get(&method).and_then(|g| mean(g)),
            best_count,
        })
        .collect())
}
