//! Coarse and fine subdivisions of the box.
//!
//! The coarse cells have side `ℓ_c`; each is subdivided `s` times, level `k`
//! holding `floor(ℓ_{k-1} / ℓ_k)` cells of side `ℓ_k` per axis, anchored at
//! the parent's lower corner. Subdivisions need not cover their parent, and
//! vertices in the uncovered margin belong to no fine cell.
//!
//! In the paper-faithful mode `ℓ_c = (log n)^(A/d)` and
//! `ℓ_k = (log n)^(θ^k A/d)` with `s = floor(log(1/(2γ)) / log θ)`, so that
//! fine cells have volume `(log n)^ν_p` with `ν_p = θ^s A`. These sides exceed
//! any box that fits in memory unless `n` is astronomically large, so the
//! explicit mode takes the sides directly and defines `ν_p` by
//! `(log n)^ν_p = ℓ_s^d`.

use serde::{Deserialize, Serialize};

use super::grid::{linear_coords, linear_index, locate, snake_coords, snake_index};
use super::ConstellationError;
use crate::sfp::SfpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    PaperFaithful,
    ExplicitSides,
}

/// Parameters of the subdivision and of the events built on it. `beta1`,
/// `beta2`, `c2` and `c3` default to 0.1, 3.0, 1.0 and 1.0, which are
/// placeholders rather than values from the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    #[serde(rename = "A")]
    pub a: f64,
    pub theta: f64,
    pub nu_s: f64,
    pub eta: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_c")]
    pub c2: f64,
    #[serde(default = "default_c")]
    pub c3: f64,
    /// Constant in `|J| >= c1 n (log n)^-A`; the bound is only checked when set.
    #[serde(default)]
    pub c1: Option<f64>,
    pub mode: PartitionMode,
    /// Explicit mode: side of the coarse cells.
    #[serde(default)]
    pub coarse_side: Option<f64>,
    /// Explicit mode: sides of the nested levels, strictly decreasing.
    #[serde(default)]
    pub level_sides: Vec<f64>,
}

fn default_beta1() -> f64 {
    0.1
}
fn default_beta2() -> f64 {
    3.0
}
fn default_c() -> f64 {
    1.0
}

impl PartitionSpec {
    pub fn explicit(coarse_side: f64, level_sides: Vec<f64>) -> Self {
        Self {
            a: 1.0,
            theta: 0.5,
            nu_s: 0.0,
            eta: 0.0,
            beta1: default_beta1(),
            beta2: default_beta2(),
            c2: default_c(),
            c3: default_c(),
            c1: None,
            mode: PartitionMode::ExplicitSides,
            coarse_side: Some(coarse_side),
            level_sides,
        }
    }
}

/// `s = floor(log(1/(2γ)) / log θ)`.
pub fn subdivision_depth(gamma: f64, theta: f64) -> u32 {
    ((1.0 / (2.0 * gamma)).ln() / theta.ln()).floor().max(0.0) as u32
}

/// `ν_p = θ^s A`.
pub fn nu_p(a: f64, theta: f64, s: u32) -> f64 {
    theta.powi(s as i32) * a
}

fn floor_count(x: f64) -> Result<u64, ConstellationError> {
    if !(x >= 0.0) || x >= 2f64.powi(53) {
        return Err(ConstellationError::InvalidParams(format!("cell count {x} out of range")));
    }
    Ok(x.floor() as u64)
}

fn fine_per_axis(level_per_axis: &[u64]) -> Result<u64, ConstellationError> {
    level_per_axis
        .iter()
        .try_fold(1u64, |acc, &m| acc.checked_mul(m))
        .ok_or_else(|| ConstellationError::InvalidParams("fine cell count per axis overflows u64".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxPartition {
    pub mode: PartitionMode,
    pub dim: usize,
    /// Side `n^(1/d)` of the whole box.
    pub side: f64,
    /// `log n` (natural logarithm).
    pub log_n: f64,
    pub coarse_side: f64,
    pub coarse_per_axis: u64,
    /// `ℓ_1, ..., ℓ_s`.
    pub level_sides: Vec<f64>,
    /// `floor(ℓ_{k-1}/ℓ_k)` for `k = 1..s`.
    pub level_per_axis: Vec<u64>,
    pub s: u32,
    pub nu_p: f64,
    /// Fine cells per axis inside one coarse cell.
    pub fine_per_coarse_axis: u64,
}

/// Location of a point in the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellLocation {
    /// Snake index of the coarse cell (0 is the cell at the origin).
    pub coarse: u64,
    /// Fine cell id, `None` in the uncovered margin of the coarse cell.
    pub fine: Option<u64>,
}

impl BoxPartition {
    /// `m_c`.
    pub fn m_c(&self) -> u128 {
        (self.coarse_per_axis as u128).pow(self.dim as u32)
    }

    /// `m_k` for `k = 1..=s`.
    pub fn m_k(&self, k: usize) -> u128 {
        (self.level_per_axis[k - 1] as u128).pow(self.dim as u32)
    }

    /// `m_f = m_c prod m_k`.
    pub fn m_f(&self) -> u128 {
        (1..=self.s as usize).fold(self.m_c(), |acc, k| acc * self.m_k(k))
    }

    /// `(log n)^ν_p`, the volume of a fine cell.
    pub fn fine_scale(&self) -> f64 {
        self.log_n.powf(self.nu_p)
    }

    pub fn fine_side(&self) -> f64 {
        self.level_sides.last().copied().unwrap_or(self.coarse_side)
    }

    fn global_fine_counts(&self) -> Vec<u64> {
        vec![self.coarse_per_axis * self.fine_per_coarse_axis; self.dim]
    }

    /// Locates a point. `None` outside the union of coarse cells.
    pub fn locate(&self, position: &[f64]) -> Option<CellLocation> {
        let mut coarse = Vec::with_capacity(self.dim);
        let mut global = Vec::with_capacity(self.dim);
        let mut inside = true;
        for &x in position {
            let c = locate(x, 0.0, self.coarse_side, self.coarse_per_axis)?;
            coarse.push(c);
            if !inside {
                continue;
            }
            let mut origin = c as f64 * self.coarse_side;
            let mut g = c;
            for (&len, &count) in self.level_sides.iter().zip(&self.level_per_axis) {
                match locate(x, origin, len, count) {
                    Some(j) => {
                        origin += j as f64 * len;
                        g = g * count + j;
                    }
                    None => {
                        inside = false;
                        break;
                    }
                }
            }
            global.push(g);
        }
        let coarse_counts = vec![self.coarse_per_axis; self.dim];
        Some(CellLocation {
            coarse: snake_index(&coarse, &coarse_counts),
            fine: inside.then(|| linear_index(&global, &self.global_fine_counts())),
        })
    }

    /// Snake index of the coarse cell containing fine cell `fine`.
    pub fn coarse_of_fine(&self, fine: u64) -> u64 {
        let g = linear_coords(fine, &self.global_fine_counts());
        let c: Vec<u64> = g.iter().map(|x| x / self.fine_per_coarse_axis).collect();
        snake_index(&c, &vec![self.coarse_per_axis; self.dim])
    }

    /// Chessboard colour of a fine cell: `true` for red. Face-adjacent fine
    /// cells are consecutive along one axis of the global fine index, so their
    /// colours differ.
    pub fn is_red(&self, fine: u64) -> bool {
        let g = linear_coords(fine, &self.global_fine_counts());
        g.iter().sum::<u64>() % 2 == 0
    }

    /// Lower corner and side of the coarse cell with snake index `i`.
    pub fn coarse_cell(&self, i: u64) -> (Vec<f64>, f64) {
        let c = snake_coords(i, &vec![self.coarse_per_axis; self.dim]);
        (c.iter().map(|&x| x as f64 * self.coarse_side).collect(), self.coarse_side)
    }

    /// Lower corner and side of fine cell `fine`.
    pub fn fine_cell(&self, fine: u64) -> (Vec<f64>, f64) {
        let g = linear_coords(fine, &self.global_fine_counts());
        let corner = g
            .iter()
            .map(|&gi| {
                let mut digits = Vec::with_capacity(self.level_per_axis.len());
                let mut rest = gi;
                for &count in self.level_per_axis.iter().rev() {
                    digits.push(rest % count);
                    rest /= count;
                }
                let mut origin = rest as f64 * self.coarse_side;
                for (&len, &j) in self.level_sides.iter().zip(digits.iter().rev()) {
                    origin += j as f64 * len;
                }
                origin
            })
            .collect();
        (corner, self.fine_side())
    }

    /// Checks with exact comparisons of the cell bounds that every level fits
    /// inside its parent and the coarse cells inside the box.
    pub fn verify_nesting(&self) -> Result<(), ConstellationError> {
        if self.coarse_per_axis as f64 * self.coarse_side > self.side {
            return Err(ConstellationError::InvalidParams("coarse cells overflow the box".into()));
        }
        let mut parent = self.coarse_side;
        for (k, (&len, &count)) in self.level_sides.iter().zip(&self.level_per_axis).enumerate() {
            if count as f64 * len > parent {
                return Err(ConstellationError::InvalidParams(format!(
                    "level {} cells overflow their parent",
                    k + 1
                )));
            }
            parent = len;
        }
        Ok(())
    }
}

/// Builds the subdivision of the box of `params`.
pub fn build_partition(params: &SfpParams, spec: &PartitionSpec) -> Result<BoxPartition, ConstellationError> {
    params
        .validate()
        .map_err(|e| ConstellationError::InvalidParams(e.to_string()))?;
    let d = params.dim as f64;
    let n = params.volume;
    let side = params.side();
    let log_n = n.ln();
    if !(log_n > 1.0) {
        return Err(ConstellationError::InvalidParams(format!(
            "volume must exceed e so that log log n > 0, got {n}"
        )));
    }
    let gamma = params.gamma();
    let partition = match spec.mode {
        PartitionMode::PaperFaithful => {
            validate_paper_faithful(params, spec)?;
            let coarse_per_axis = floor_count(side / log_n.powf(spec.a / d))?;
            if coarse_per_axis == 0 {
                return Err(ConstellationError::Infeasible(format!(
                    "(log n)^(A/d) = {} exceeds n^(1/d) = {side}: asymptotic regime unreachable at this n; \
                     use explicit_sides",
                    log_n.powf(spec.a / d)
                )));
            }
            let s = subdivision_depth(gamma, spec.theta);
            let mut level_sides = Vec::with_capacity(s as usize);
            let mut level_per_axis = Vec::with_capacity(s as usize);
            for k in 1..=s as i32 {
                let hi = spec.theta.powi(k - 1);
                let lo = spec.theta.powi(k);
                level_per_axis.push(floor_count(log_n.powf((hi - lo) * spec.a / d))?);
                level_sides.push(log_n.powf(lo * spec.a / d));
            }
            BoxPartition {
                mode: spec.mode,
                dim: params.dim,
                side,
                log_n,
                coarse_side: log_n.powf(spec.a / d),
                coarse_per_axis,
                fine_per_coarse_axis: fine_per_axis(&level_per_axis)?,
                level_sides,
                level_per_axis,
                s,
                nu_p: nu_p(spec.a, spec.theta, s),
            }
        }
        PartitionMode::ExplicitSides => {
            let coarse_side = spec.coarse_side.ok_or_else(|| {
                ConstellationError::InvalidParams("explicit_sides needs coarse_side".into())
            })?;
            if !(coarse_side > 0.0 && coarse_side <= side) {
                return Err(ConstellationError::InvalidParams(format!(
                    "coarse side {coarse_side} must lie in (0, {side}]"
                )));
            }
            let mut parent = coarse_side;
            let mut level_per_axis = Vec::new();
            for &len in &spec.level_sides {
                if !(len > 0.0 && len <= parent) {
                    return Err(ConstellationError::InvalidParams(format!(
                        "level side {len} must lie in (0, {parent}]"
                    )));
                }
                level_per_axis.push(floor_count(parent / len)?);
                parent = len;
            }
            let fine_side = parent;
            BoxPartition {
                mode: spec.mode,
                dim: params.dim,
                side,
                log_n,
                coarse_side,
                coarse_per_axis: floor_count(side / coarse_side)?,
                fine_per_coarse_axis: fine_per_axis(&level_per_axis)?,
                level_sides: spec.level_sides.clone(),
                level_per_axis,
                s: spec.level_sides.len() as u32,
                nu_p: d * fine_side.ln() / log_n.ln(),
            }
        }
    };
    let total = (partition.coarse_per_axis as u128)
        .checked_mul(partition.fine_per_coarse_axis as u128)
        .and_then(|a| a.checked_pow(partition.dim as u32))
        .filter(|&m| m <= u64::MAX as u128);
    if total.is_none() {
        return Err(ConstellationError::InvalidParams(
            "more than 2^64 fine cells; fine cell ids would overflow".into(),
        ));
    }
    partition.verify_nesting()?;
    Ok(partition)
}

/// Interval constraints of the paper-faithful mode:
/// `A > 2γ/(2 - α/d)`, `max(2/3, α/(2d) + γ/A) < θ < 1`,
/// `ν_p < ν_s < (A-1)/γ` and `αν_s/d < η < (A-1)/(τ-1)`.
pub fn validate_paper_faithful(params: &SfpParams, spec: &PartitionSpec) -> Result<(), ConstellationError> {
    let d = params.dim as f64;
    let gamma = params.gamma();
    let bad = |m: String| Err(ConstellationError::InvalidParams(m));
    if params.alpha >= 2.0 * d {
        return bad(format!("needs alpha < 2d, got alpha = {}", params.alpha));
    }
    let a_min = 2.0 * gamma / (2.0 - params.alpha / d);
    if !(spec.a > a_min) {
        return bad(format!("A = {} must exceed 2γ/(2-α/d) = {a_min}", spec.a));
    }
    let theta_min = (2.0 / 3.0f64).max(params.alpha / (2.0 * d) + gamma / spec.a);
    if !(spec.theta > theta_min && spec.theta < 1.0) {
        return bad(format!("theta = {} must lie in ({theta_min}, 1)", spec.theta));
    }
    if !(2.0 * gamma > 1.0) {
        return bad(format!("needs γ > 1/2 for a positive depth, got {gamma}"));
    }
    let np = nu_p(spec.a, spec.theta, subdivision_depth(gamma, spec.theta));
    let nu_s_max = (spec.a - 1.0) / gamma;
    if !(spec.nu_s > np && spec.nu_s < nu_s_max) {
        return bad(format!("nu_s = {} must lie in ({np}, {nu_s_max})", spec.nu_s));
    }
    let (eta_min, eta_max) = (params.alpha * spec.nu_s / d, (spec.a - 1.0) / (params.tau - 1.0));
    if !(spec.eta > eta_min && spec.eta < eta_max) {
        return bad(format!("eta = {} must lie in ({eta_min}, {eta_max})", spec.eta));
    }
    validate_thresholds(spec)
}

pub(crate) fn validate_thresholds(spec: &PartitionSpec) -> Result<(), ConstellationError> {
    let ok = spec.beta1 >= 0.0 && spec.beta2 > spec.beta1 && spec.c2 >= 0.0 && spec.c3 > 0.0;
    if !ok {
        return Err(ConstellationError::InvalidParams(format!(
            "need 0 <= beta1 < beta2, c2 >= 0, c3 > 0; got beta1={}, beta2={}, c2={}, c3={}",
            spec.beta1, spec.beta2, spec.c2, spec.c3
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfp::Boundary;

    fn params(d: usize, volume: f64) -> SfpParams {
        SfpParams::new(d, 1.5, 3.0, 1.0, volume).unwrap()
    }

    #[test]
    fn explicit_coarse_count() {
        let p = params(1, 1000.0);
        let part = build_partition(&p, &PartitionSpec::explicit(100.0, vec![])).unwrap();
        assert_eq!(part.m_c(), 10);
        assert_eq!(part.m_f(), 10);
    }

    #[test]
    fn depth_formula() {
        // log(1/5)/log(0.9) = 15.27
        assert_eq!(subdivision_depth(2.5, 0.9), 15);
    }

    #[test]
    fn nu_p_bounds_on_lattice() {
        for gamma in [0.6, 1.0, 2.5, 4.0, 9.0] {
            for a in [1.0, 3.0, 10.0, 40.0] {
                for theta in [0.67, 0.75, 0.9, 0.99] {
                    let s = subdivision_depth(gamma, theta);
                    let np = nu_p(a, theta, s);
                    assert!(a / (2.0 * gamma) <= np * (1.0 + 1e-12), "{gamma} {a} {theta}");
                    assert!(np <= a / (2.0 * gamma * theta) * (1.0 + 1e-12), "{gamma} {a} {theta}");
                }
            }
        }
    }

    #[test]
    fn paper_faithful_is_infeasible_at_desk_scale() {
        // d=1, alpha=1.5, tau=3: gamma=3, A > 12, theta > 0.9808, s = 178,
        // nu_p = 2.17, nu_s in (2.17, 4), eta in (1.5 nu_s, 6).
        let p = params(1, 1e6);
        let spec = PartitionSpec {
            a: 13.0,
            theta: 0.99,
            nu_s: 3.0,
            eta: 5.0,
            mode: PartitionMode::PaperFaithful,
            ..PartitionSpec::explicit(1.0, vec![])
        };
        assert!(matches!(build_partition(&p, &spec), Err(ConstellationError::Infeasible(_))));
    }

    #[test]
    fn locate_and_colour_in_two_dimensions() {
        let p = params(2, 400.0).with_boundary(Boundary::Box);
        // side 20, coarse 10 (2x2), levels 4 (2 per axis, margin 2) and 2.
        let part = build_partition(&p, &PartitionSpec::explicit(10.0, vec![4.0, 2.0])).unwrap();
        assert_eq!(part.coarse_per_axis, 2);
        assert_eq!(part.level_per_axis, vec![2, 2]);
        assert_eq!(part.m_f(), 4 * 4 * 4);
        let loc = part.locate(&[0.5, 0.5]).unwrap();
        assert_eq!(loc.coarse, 0);
        assert_eq!(loc.fine, Some(0));
        // In the margin of level 1 (x in [8, 10)).
        assert_eq!(part.locate(&[9.0, 1.0]).unwrap().fine, None);
        // Snake order: second coarse cell is (1, 0).
        assert_eq!(part.locate(&[12.0, 1.0]).unwrap().coarse, 1);
        assert_eq!(part.locate(&[12.0, 11.0]).unwrap().coarse, 2);
        let a = part.locate(&[2.5, 0.5]).unwrap().fine.unwrap();
        let b = part.locate(&[4.5, 0.5]).unwrap().fine.unwrap();
        assert_ne!(part.is_red(0), part.is_red(a));
        assert_ne!(part.is_red(a), part.is_red(b));
        let (corner, len) = part.fine_cell(b);
        assert_eq!((corner, len), (vec![4.0, 0.0], 2.0));
        assert_eq!(part.coarse_of_fine(b), 0);
    }

    #[test]
    fn explicit_sides_must_nest() {
        let p = params(1, 1000.0);
        assert!(build_partition(&p, &PartitionSpec::explicit(100.0, vec![200.0])).is_err());
        assert!(build_partition(&p, &PartitionSpec::explicit(2000.0, vec![])).is_err());
    }
}
