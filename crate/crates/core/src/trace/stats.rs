use serde::{Deserialize, Serialize};

use super::TraceError;

/// Summary of a series in its native unit. `std` is the population standard
/// deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
}

/// Arithmetic mean. A constant series returns its value exactly, and the
/// result does not depend on element order.
pub fn mean(series: &[f64]) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let first = series[0];
    if series.iter().all(|&x| x == first) {
        return first;
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

pub fn trace_stats(series: &[f64]) -> Result<TraceStats, TraceError> {
    if series.is_empty() {
        return Err(TraceError::EmptySeries);
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = mean(&sorted);
    let variance = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    Ok(TraceStats {
        min: sorted[0],
        max: sorted[n - 1],
        median,
        mean,
        std: variance.sqrt(),
    })
}

/// Number of elements in the top `fraction` of a series of length `n`.
pub(crate) fn top_count(fraction: f64, n: usize) -> usize {
    (((fraction * n as f64) - 1e-9).ceil() as usize).clamp(1, n)
}

/// Moves the largest `fraction` of the values to the front (or back),
/// keeping the original relative order inside both groups.
pub(crate) fn load(series: &[f64], fraction: f64, front: bool) -> Vec<f64> {
    let k = top_count(fraction, series.len());
    let mut idx: Vec<usize> = (0..series.len()).collect();
    // Stable: ties keep original order.
    idx.sort_by(|&a, &b| series[b].total_cmp(&series[a]));
    let mut is_top = vec![false; series.len()];
    for &i in &idx[..k] {
        is_top[i] = true;
    }
    let top = series.iter().zip(&is_top).filter(|(_, &t)| t).map(|(&x, _)| x);
    let rest = series.iter().zip(&is_top).filter(|(_, &t)| !t).map(|(&x, _)| x);
    if front {
        top.chain(rest).collect()
    } else {
        rest.chain(top).collect()
    }
}

/// Reorderings of `series` that keep its multiset (and so its mean and std):
/// original, ascending, descending, front-loaded and back-loaded by
/// `fraction`. Returned with a label each.
pub fn mean_preserving_permutations(series: &[f64], fraction: f64) -> Result<Vec<(&'static str, Vec<f64>)>, TraceError> {
    if series.is_empty() {
        return Err(TraceError::EmptySeries);
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(TraceError::InvalidSpec(format!("fraction must be in (0, 1), got {fraction}")));
    }
    let mut ascending = series.to_vec();
    ascending.sort_by(f64::total_cmp);
    let mut descending = ascending.clone();
    descending.reverse();
    Ok(vec![
        ("original", series.to_vec()),
        ("ascending", ascending),
        ("descending", descending),
        ("front_loaded", load(series, fraction, true)),
        ("back_loaded", load(series, fraction, false)),
    ])
}
