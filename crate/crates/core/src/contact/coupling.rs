//! Runs sharing one graphical construction, with a pathwise containment check.

use serde::Serialize;

use super::graphical::GraphicalConstruction;
use super::run::{run, EventKind, Trajectory};
use super::ContactError;

/// Containment check between two runs expected to be ordered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    /// Index of the run expected to be dominated.
    pub lower: usize,
    pub upper: usize,
    /// Distinct event times at which containment was checked.
    pub times_checked: usize,
    /// Event times at which some vertex was infected in `lower` but not in `upper`.
    pub violation_times: Vec<f64>,
    /// Whether the extinction times respect the order (censored counts as +∞).
    pub tau_ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingCertificate {
    /// The parameter distinguishing the runs: rates, or initial-set sizes.
    pub labels: Vec<f64>,
    pub pairs: Vec<PairCheck>,
}

impl CouplingCertificate {
    pub fn containment_violations(&self) -> usize {
        self.pairs.iter().map(|p| p.violation_times.len()).sum()
    }

    pub fn tau_order_violations(&self) -> usize {
        self.pairs.iter().filter(|p| !p.tau_ordered).count()
    }

    pub fn holds(&self) -> bool {
        self.containment_violations() == 0 && self.tau_order_violations() == 0
    }
}

/// Runs every rate in `lambdas` (sorted ascending) on the same construction.
pub fn coupled_run(
    gc: &GraphicalConstruction<'_>,
    lambdas: &[f64],
    initial: &[u32],
) -> Result<(Vec<Trajectory>, CouplingCertificate), ContactError> {
    if lambdas.windows(2).any(|w| w[0] > w[1]) {
        return Err(ContactError::Unsorted);
    }
    let trajs = lambdas
        .iter()
        .map(|&l| run(gc, l, initial))
        .collect::<Result<Vec<_>, _>>()?;
    let cert = certify(gc.graph().vertex_count(), &trajs, lambdas.to_vec());
    Ok((trajs, cert))
}

/// Runs one rate from each of the nested initial sets `initials[0] ⊆ initials[1] ⊆ ...`.
pub fn coupled_run_initial(
    gc: &GraphicalConstruction<'_>,
    lambda: f64,
    initials: &[Vec<u32>],
) -> Result<(Vec<Trajectory>, CouplingCertificate), ContactError> {
    for w in initials.windows(2) {
        if !w[0].iter().all(|v| w[1].contains(v)) {
            return Err(ContactError::NotNested);
        }
    }
    let trajs = initials
        .iter()
        .map(|init| run(gc, lambda, init))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = trajs.iter().map(|t| t.initial.len() as f64).collect();
    let cert = certify(gc.graph().vertex_count(), &trajs, labels);
    Ok((trajs, cert))
}

/// Sweeps the merged event times of all trajectories and checks that each
/// consecutive pair stays nested after every distinct time.
fn certify(n: usize, trajs: &[Trajectory], labels: Vec<f64>) -> CouplingCertificate {
    let k = trajs.len();
    let mut state = vec![vec![false; n]; k];
    for (s, t) in state.iter_mut().zip(trajs) {
        for &v in &t.initial {
            s[v as usize] = true;
        }
    }
    // excess[i] = |state[i] \ state[i+1]|
    let mut excess: Vec<usize> = (0..k.saturating_sub(1))
        .map(|i| (0..n).filter(|&v| state[i][v] && !state[i + 1][v]).count())
        .collect();
    let mut pairs: Vec<PairCheck> = (0..k.saturating_sub(1))
        .map(|i| PairCheck {
            lower: i,
            upper: i + 1,
            times_checked: 1,
            violation_times: if excess[i] > 0 { vec![0.0] } else { vec![] },
            tau_ordered: trajs[i].tau_or_horizon_ordered(&trajs[i + 1]),
        })
        .collect();

    let mut merged: Vec<(f64, usize, usize)> = trajs
        .iter()
        .enumerate()
        .flat_map(|(r, t)| t.events.iter().enumerate().map(move |(e, ev)| (ev.time, r, e)))
        .collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut i = 0;
    while i < merged.len() {
        let t = merged[i].0;
        while i < merged.len() && merged[i].0 == t {
            let (_, r, e) = merged[i];
            let ev = &trajs[r].events[e];
            let v = ev.vertex as usize;
            let now = matches!(ev.kind, EventKind::Infect { .. });
            let was = state[r][v];
            state[r][v] = now;
            if was != now {
                // pair (r-1, r): excess counts state[r-1] \ state[r]
                if r > 0 && state[r - 1][v] {
                    if now {
                        excess[r - 1] -= 1;
                    } else {
                        excess[r - 1] += 1;
                    }
                }
                // pair (r, r+1)
                if r + 1 < k && !state[r + 1][v] {
                    if now {
                        excess[r] += 1;
                    } else {
                        excess[r] -= 1;
                    }
                }
            }
            i += 1;
        }
        for (p, &x) in pairs.iter_mut().zip(&excess) {
            p.times_checked += 1;
            if x > 0 {
                p.violation_times.push(t);
            }
        }
    }
    CouplingCertificate { labels, pairs }
}

impl Trajectory {
    fn tau_or_horizon_ordered(&self, upper: &Trajectory) -> bool {
        let tau = |t: &Trajectory| t.extinction_time.unwrap_or(f64::INFINITY);
        tau(self) <= tau(upper)
    }
}
