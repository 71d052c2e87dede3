//! Regression fits: degree against weight, extinction time against size.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, median};
use super::AnalysisError;
use crate::contact::ReplicaRecord;
use crate::sfp::SfpGraph;

/// Bins with fewer vertices than this are left out of the degree-weight fit.
pub const MIN_BIN_COUNT: usize = 10;
pub const MIN_OCCUPIED_BINS: usize = 10;
pub const MIN_SCALING_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_bins: usize,
    pub bins_used: usize,
    /// `(mean log weight, mean degree, count)` of every bin used.
    pub bins: Vec<(f64, f64, usize)>,
}

/// Slope of `log(mean degree)` against `log(weight)` over `n_bins`
/// logarithmic weight bins between the smallest and largest weight. Bins
/// holding fewer than [`MIN_BIN_COUNT`] vertices or only isolated vertices
/// are skipped; at least ten bins must remain.
pub fn degree_weight_scaling(g: &SfpGraph, n_bins: usize) -> Result<WeightScalingFit, AnalysisError> {
    let need = MIN_OCCUPIED_BINS;
    if n_bins < need {
        return Err(AnalysisError::InsufficientBins { need, got: n_bins });
    }
    let w = g.vertices().weights();
    let (lo, hi) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !(hi > lo) {
        return Err(AnalysisError::InsufficientBins { need, got: 0 });
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let width = (lhi - llo) / n_bins as f64;
    let mut sum_lw = vec![0.0; n_bins];
    let mut sum_deg = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for (v, &wv) in w.iter().enumerate() {
        let b = (((wv.ln() - llo) / width) as usize).min(n_bins - 1);
        sum_lw[b] += wv.ln();
        sum_deg[b] += g.graph().degree(v as u32) as f64;
        count[b] += 1;
    }
    let bins: Vec<(f64, f64, usize)> = (0..n_bins)
        .filter(|&b| count[b] >= MIN_BIN_COUNT && sum_deg[b] > 0.0)
        .map(|b| (sum_lw[b] / count[b] as f64, sum_deg[b] / count[b] as f64, count[b]))
        .collect();
    if bins.len() < need {
        return Err(AnalysisError::InsufficientBins { need, got: bins.len() });
    }
    let x: Vec<f64> = bins.iter().map(|b| b.0).collect();
    let y: Vec<f64> = bins.iter().map(|b| b.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&x, &y);
    Ok(WeightScalingFit {
        slope,
        intercept,
        r2,
        n_bins,
        bins_used: bins.len(),
        bins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    N,
    /// `n / (log n)^A`.
    NOverLogA { a: f64 },
}

impl Predictor {
    pub fn apply(&self, n: f64) -> f64 {
        match *self {
            Predictor::N => n,
            Predictor::NOverLogA { a } => n / n.ln().powf(a),
        }
    }
}

/// Median extinction time at one size. Censored replicas sit at the horizon,
/// above every extinct one, so the median is exact while fewer than half are
/// censored and a lower bound otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionPoint {
    pub n: f64,
    pub median_tau: f64,
    pub censored_fraction: f64,
    pub replicas: usize,
}

impl ExtinctionPoint {
    pub fn from_records(n: f64, records: &[ReplicaRecord]) -> Self {
        let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
        let censored = records.iter().filter(|r| r.censored).count();
        Self {
            n,
            median_tau: median(&taus),
            censored_fraction: censored as f64 / records.len() as f64,
            replicas: records.len(),
        }
    }

    pub fn median_is_lower_bound(&self) -> bool {
        self.censored_fraction >= 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub predictor: Predictor,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    /// Some median is only a lower bound, so the slope is one too.
    pub lower_bound_only: bool,
    pub censored_sizes: Vec<f64>,
}

/// Least squares fit of `log(median τ)` against the predictor.
pub fn extinction_scaling_fit(points: &[ExtinctionPoint], predictor: Predictor) -> Result<ScalingFit, AnalysisError> {
    if points.len() < MIN_SCALING_POINTS {
        return Err(AnalysisError::InsufficientPoints {
            need: MIN_SCALING_POINTS,
            got: points.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| !(p.median_tau > 0.0 && p.n > 1.0)) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need n > 1 and a positive median, got n = {}, median = {}",
            p.n, p.median_tau
        )));
    }
    let censored_sizes: Vec<f64> = points.iter().filter(|p| p.median_is_lower_bound()).map(|p| p.n).collect();
    if censored_sizes.len() == points.len() {
        return Err(AnalysisError::ExcessiveCensoring);
    }
    let x: Vec<f64> = points.iter().map(|p| predictor.apply(p.n)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.median_tau.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&x, &y);
    Ok(ScalingFit {
        predictor,
        slope,
        intercept,
        r2,
        points: points.len(),
        lower_bound_only: !censored_sizes.is_empty(),
        censored_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: f64, tau: f64, censored_fraction: f64) -> ExtinctionPoint {
        ExtinctionPoint {
            n,
            median_tau: tau,
            censored_fraction,
            replicas: 100,
        }
    }

    #[test]
    fn exact_exponential_growth() {
        let pts: Vec<_> = [100.0, 200.0, 400.0, 800.0].iter().map(|&n| point(n, (0.01 * n).exp(), 0.0)).collect();
        let fit = extinction_scaling_fit(&pts, Predictor::N).unwrap();
        assert!((fit.slope - 0.01).abs() < 1e-6);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(!fit.lower_bound_only);
    }

    #[test]
    fn flat_times_give_zero_slope() {
        let pts: Vec<_> = [10.0, 20.0, 30.0, 40.0].iter().map(|&n| point(n, 1.0, 0.0)).collect();
        assert_eq!(extinction_scaling_fit(&pts, Predictor::NOverLogA { a: 2.0 }).unwrap().slope, 0.0);
    }

    #[test]
    fn censoring_and_size_errors() {
        let mut pts: Vec<_> = [10.0, 20.0, 30.0].iter().map(|&n| point(n, 1.0, 0.0)).collect();
        assert!(matches!(
            extinction_scaling_fit(&pts, Predictor::N),
            Err(AnalysisError::InsufficientPoints { need: 4, got: 3 })
        ));
        pts.push(point(40.0, 5.0, 0.6));
        let fit = extinction_scaling_fit(&pts, Predictor::N).unwrap();
        assert!(fit.lower_bound_only);
        assert_eq!(fit.censored_sizes, vec![40.0]);
        let all: Vec<_> = pts.iter().map(|p| point(p.n, 1.0, 1.0)).collect();
        assert_eq!(extinction_scaling_fit(&all, Predictor::N), Err(AnalysisError::ExcessiveCensoring));
    }

    #[test]
    fn median_of_records_counts_censoring() {
        let rec = |tau, censored| ReplicaRecord {
            replica: 0,
            lambda: 1.0,
            tau,
            censored,
            final_infected: 0,
        };
        let p = ExtinctionPoint::from_records(50.0, &[rec(1.0, false), rec(3.0, false), rec(10.0, true)]);
        assert_eq!(p.median_tau, 3.0);
        assert!(!p.median_is_lower_bound());
    }
}
