//! Tail exponent of a heavy-tailed sample, `P(X > s) ≈ s^-γ`.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, Interval};
use super::AnalysisError;
use crate::graph::UndirectedGraph;

pub const DEFAULT_TAIL_FRACTION: f64 = 0.01;
pub const TAIL_FRACTION_SWEEP: [f64; 3] = [0.005, 0.01, 0.05];
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailEstimator {
    Hill,
    LogLogRegression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub estimator: TailEstimator,
    pub exponent: f64,
    /// 95% interval from the asymptotic standard error.
    pub ci: Interval,
    pub standard_error: f64,
    pub tail_fraction: f64,
    /// Number of order statistics used.
    pub k: usize,
    pub sample_size: usize,
}

/// Fits the exponent to the top `tail_fraction` of `sample`.
///
/// Hill uses `k = ceil(tail_fraction N)` upper order statistics above the
/// threshold `X_(k+1)`: `γ̂ = k / Σ log(X_(i) / X_(k+1))`, standard error
/// `γ̂/√k`. The regression fits `log(i/N)` against `log X_(i)` over the same
/// `k` points and reports minus the slope.
pub fn tail_fit(sample: &[f64], tail_fraction: f64, estimator: TailEstimator) -> Result<TailFit, AnalysisError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 0.5) {
        return Err(AnalysisError::InvalidArgument(format!(
            "tail fraction must lie in (0, 0.5], got {tail_fraction}"
        )));
    }
    let n = sample.len();
    let k = ((tail_fraction * n as f64).ceil() as usize).min(n.saturating_sub(1));
    if k < 2 {
        return Err(AnalysisError::TooFewVertices { need: (2.0 / tail_fraction).ceil() as usize + 1, got: n });
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| b.total_cmp(a));
    let threshold = x[k];
    if !(threshold > 0.0) || x[0] == threshold {
        return Err(AnalysisError::DegenerateTail(format!(
            "top {k} values do not exceed the threshold {threshold} or it is not positive"
        )));
    }
    let (exponent, se) = match estimator {
        TailEstimator::Hill => {
            let sum: f64 = x[..k].iter().map(|v| (v / threshold).ln()).sum();
            let g = k as f64 / sum;
            (g, g / (k as f64).sqrt())
        }
        TailEstimator::LogLogRegression => {
            let lx: Vec<f64> = x[..k].iter().map(|v| v.ln()).collect();
            let ly: Vec<f64> = (1..=k).map(|i| (i as f64 / n as f64).ln()).collect();
            let (slope, intercept, _) = linear_fit(&lx, &ly);
            let mx = lx.iter().sum::<f64>() / k as f64;
            let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
            if !(sxx > 0.0) {
                return Err(AnalysisError::DegenerateTail("all tail values are equal".into()));
            }
            let sse: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
            (-slope, (sse / (k as f64 - 2.0).max(1.0) / sxx).sqrt())
        }
    };
    Ok(TailFit {
        estimator,
        exponent,
        ci: Interval {
            low: exponent - Z95 * se,
            high: exponent + Z95 * se,
        },
        standard_error: se,
        tail_fraction,
        k,
        sample_size: n,
    })
}

/// Degree tail exponent of a graph with at least 100 vertices.
pub fn degree_tail_fit(
    graph: &UndirectedGraph,
    tail_fraction: f64,
    estimator: TailEstimator,
) -> Result<TailFit, AnalysisError> {
    let n = graph.vertex_count();
    if n < 100 {
        return Err(AnalysisError::TooFewVertices { need: 100, got: n });
    }
    let degrees: Vec<f64> = graph.degrees().into_iter().map(|d| d as f64).collect();
    tail_fit(&degrees, tail_fraction, estimator)
}

/// [`degree_tail_fit`] at each fraction of [`TAIL_FRACTION_SWEEP`].
pub fn tail_sensitivity(graph: &UndirectedGraph, estimator: TailEstimator) -> Vec<Result<TailFit, AnalysisError>> {
    TAIL_FRACTION_SWEEP
        .iter()
        .map(|&f| degree_tail_fit(graph, f, estimator))
        .collect()
}
