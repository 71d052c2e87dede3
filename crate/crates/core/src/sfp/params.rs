use serde::{Deserialize, Serialize};

use super::SfpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// The box `[0, side)^d` with Euclidean distance and no wrap-around.
    #[default]
    Box,
    /// Same box with periodic (minimum-image) distance.
    Torus,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Box => "box",
            Boundary::Torus => "torus",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = SfpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "box" => Ok(Boundary::Box),
            "torus" => Ok(Boundary::Torus),
            other => Err(SfpError::InvalidParams(format!(
                "unknown boundary `{other}` (expected box or torus)"
            ))),
        }
    }
}

/// Model parameters of scale-free percolation restricted to a box of volume `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfpParams {
    pub dim: usize,
    pub alpha: f64,
    pub tau: f64,
    pub rho: f64,
    pub volume: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl SfpParams {
    pub fn new(dim: usize, alpha: f64, tau: f64, rho: f64, volume: f64) -> Result<Self, SfpError> {
        let p = Self {
            dim,
            alpha,
            tau,
            rho,
            volume,
            boundary: Boundary::Box,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_volume(mut self, volume: f64) -> Self {
        self.volume = volume;
        self
    }

    /// Degree-tail exponent `α(τ-1)/d`.
    pub fn gamma(&self) -> f64 {
        self.alpha * (self.tau - 1.0) / self.dim as f64
    }

    /// Side length `volume^(1/d)` of the box.
    pub fn side(&self) -> f64 {
        if self.dim == 1 {
            self.volume
        } else {
            self.volume.powf(1.0 / self.dim as f64)
        }
    }

    pub fn validate(&self) -> Result<(), SfpError> {
        let bad = |m: String| Err(SfpError::InvalidParams(m));
        if self.dim == 0 {
            return bad("dimension d must be at least 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.tau.is_finite() && self.tau > 1.0) {
            return bad(format!(
                "tau must exceed 1 (weights have infinite mean otherwise), got {}",
                self.tau
            ));
        }
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return bad(format!("rho must be non-negative, got {}", self.rho));
        }
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return bad(format!("volume must be positive, got {}", self.volume));
        }
        Ok(())
    }

    /// Distance between two positions under the configured boundary.
    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.boundary {
            Boundary::Box => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Boundary::Torus => {
                let side = self.side();
                x.iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let t = (a - b).abs();
                        let t = t.min(side - t);
                        t * t
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// Edge probability `1 - exp(-ρ w_x w_y / |x-y|^α)`.
    pub fn connection_probability(
        &self,
        x: &[f64],
        y: &[f64],
        wx: f64,
        wy: f64,
    ) -> Result<f64, SfpError> {
        let r = self.distance(x, y);
        if r == 0.0 {
            return Err(SfpError::CoincidentPoints);
        }
        Ok(self.probability_at_distance(r, wx, wy))
    }

    #[inline]
    pub(crate) fn probability_at_distance(&self, r: f64, wx: f64, wy: f64) -> f64 {
        -(-self.rho * wx * wy / r.powf(self.alpha)).exp_m1()
    }
}

/// Inverse-CDF Pareto draw `u^(-1/(τ-1))`, so that `P(W ≥ t) = t^(-(τ-1))`.
pub fn sample_weight(tau: f64, u: f64) -> Result<f64, SfpError> {
    if !(tau > 1.0 && tau.is_finite()) {
        return Err(SfpError::InvalidParams(format!(
            "tau must exceed 1, got {tau}"
        )));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(SfpError::InvalidParams(format!(
            "uniform draw must lie in (0,1), got {u}"
        )));
    }
    Ok(pareto(tau, u))
}

#[inline]
pub(crate) fn pareto(tau: f64, u: f64) -> f64 {
    u.powf(-1.0 / (tau - 1.0))
}
