//! Lazily generated graphical construction.
//!
//! Each vertex `w` carries two independent Poisson clocks: a recovery clock of
//! rate 1 and an incoming-arrow clock of rate `deg(w) λmax`. A ring of the
//! incoming clock is an arrow `u -> w` from a uniformly chosen neighbour `u`,
//! with a uniform mark. This is the same law as one rate-`λmax` arrow process
//! per directed edge, indexed by target, which lets a run ignore every clock
//! that cannot change the state: recovery clocks of healthy vertices and
//! incoming clocks of infected vertices or of vertices with no infected
//! neighbour.
//!
//! Time is cut into blocks of four expected rings. The rings of block `k`
//! of a clock come from a stream keyed by `(seed, clock, k)`, so any block
//! can be produced on demand and in any order, and extending the horizon never
//! changes earlier rings.

use rand::{RngCore, SeedableRng};
use rand_distr::{Distribution, Exp1};
use rand_xoshiro::SplitMix64;

use super::ContactError;
use crate::graph::UndirectedGraph;
use crate::seeds::{mix, short_stream, Purpose};

const RINGS_PER_BLOCK: f64 = 4.0;
const INCOMING_RINGS_PER_BLOCK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Clock {
    Recovery(u32),
    Incoming(u32),
}

impl Clock {
    #[inline]
    pub fn id(self) -> u32 {
        match self {
            Clock::Recovery(v) => 2 * v,
            Clock::Incoming(v) => 2 * v + 1,
        }
    }

    #[inline]
    pub fn from_id(id: u32) -> Self {
        if id & 1 == 0 {
            Clock::Recovery(id / 2)
        } else {
            Clock::Incoming(id / 2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Ring {
    pub time: f64,
    /// Raw 64-bit draw of an incoming ring; unused for recoveries.
    pub draw: u64,
}

impl Ring {
    /// Neighbour index of the arrow source among `deg` neighbours and the
    /// uniform mark in `[0, 1)`. The arrow is open at rate `λ` iff
    /// `mark < λ / λmax`. The integer part of `u deg` picks the source and
    /// the fractional part is the mark.
    #[inline]
    pub fn source_and_mark(&self, deg: usize) -> (usize, f64) {
        let u = (self.draw >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let y = u * deg as f64;
        let slot = (y as usize).min(deg - 1);
        (slot, (y - slot as f64).clamp(0.0, 1.0 - f64::EPSILON))
    }
}

/// Position in the ring sequence of one clock.
#[derive(Debug, Clone)]
pub(crate) struct RingCursor {
    pub ring: Ring,
    inv_rate: f64,
    block_len: f64,
    /// Stream key of the clock, without the block index.
    key: u64,
    block: u64,
    end: f64,
    rng: SplitMix64,
}

impl RingCursor {
    #[inline(never)]
    fn enter_block(&mut self, k: u64) {
        self.block = k;
        self.rng = short_stream(self.key, k);
        self.ring.time = k as f64 * self.block_len;
        self.end = (k + 1) as f64 * self.block_len;
    }
}

impl Default for RingCursor {
    fn default() -> Self {
        Self {
            ring: Ring { time: 0.0, draw: 0 },
            inv_rate: 0.0,
            block_len: 0.0,
            key: 0,
            block: 0,
            end: 0.0,
            rng: SplitMix64::seed_from_u64(0),
        }
    }
}

/// Index `k` with `k h <= t < (k + 1) h`, for `t >= 0`.
#[inline]
fn block_containing(t: f64, h: f64) -> u64 {
    let k = (t / h) as u64;
    if k > 0 && k as f64 * h > t {
        k - 1
    } else if (k + 1) as f64 * h <= t {
        k + 1
    } else {
        k
    }
}

/// Shared randomness of the contact process on one graph.
#[derive(Debug, Clone)]
pub struct GraphicalConstruction<'g> {
    graph: &'g UndirectedGraph,
    lambda_max: f64,
    t_max: f64,
    seed: u64,
}

impl<'g> GraphicalConstruction<'g> {
    pub fn build(
        graph: &'g UndirectedGraph,
        lambda_max: f64,
        t_max: f64,
        seed: u64,
    ) -> Result<Self, ContactError> {
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(ContactError::InvalidRate(lambda_max));
        }
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(ContactError::InvalidHorizon(t_max));
        }
        Ok(Self {
            graph,
            lambda_max,
            t_max,
            seed,
        })
    }

    pub fn graph(&self) -> &'g UndirectedGraph {
        self.graph
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same randomness, different horizon.
    pub fn with_horizon(&self, t_max: f64) -> Result<Self, ContactError> {
        if !(t_max >= 0.0 && t_max.is_finite()) {
            return Err(ContactError::InvalidHorizon(t_max));
        }
        Ok(Self {
            t_max,
            ..self.clone()
        })
    }

    #[inline]
    fn rate(&self, clock: Clock) -> f64 {
        match clock {
            Clock::Recovery(_) => 1.0,
            Clock::Incoming(w) => self.graph.degree(w) as f64 * self.lambda_max,
        }
    }

    #[inline]
    fn rings_per_block(&self, clock: Clock) -> f64 {
        match clock {
            Clock::Recovery(_) => RINGS_PER_BLOCK,
            Clock::Incoming(_) => INCOMING_RINGS_PER_BLOCK,
        }
    }

    /// Moves `cur` to the next ring of `clock`. Each ring consumes one
    /// exponential spacing and, for incoming clocks, one 64-bit draw.
    #[inline(always)]
    pub(crate) fn step(&self, clock: Clock, cur: &mut RingCursor) {
        loop {
            let e: f64 = Exp1.sample(&mut cur.rng);
            let t = cur.ring.time + e * cur.inv_rate;
            if t < cur.end {
                cur.ring.time = t;
                if let Clock::Incoming(_) = clock {
                    cur.ring.draw = cur.rng.next_u64();
                }
                return;
            }
            cur.enter_block(cur.block + 1);
        }
    }

    fn prepare(&self, clock: Clock, cur: &mut RingCursor) {
        let rate = self.rate(clock);
        cur.inv_rate = 1.0 / rate;
        cur.block_len = self.rings_per_block(clock) / rate;
        cur.key = mix(self.seed, &[Purpose::Dynamics as u64, clock.id() as u64]);
    }

    /// Puts `cur` on the first ring of `clock` strictly after `t`. A cursor
    /// that is already valid is assumed to have consumed only rings at times
    /// no later than `t`. The clock must have positive rate.
    #[inline]
    pub(crate) fn seek(&self, clock: Clock, cur: &mut RingCursor, valid: bool, t: f64) {
        if valid && cur.ring.time > t {
            return;
        }
        if !valid {
            self.prepare(clock, cur);
            cur.enter_block(block_containing(t, cur.block_len));
        } else if t >= cur.end {
            cur.enter_block(block_containing(t, cur.block_len));
        }
        while cur.ring.time <= t {
            self.step(clock, cur);
        }
    }

    fn start(&self, clock: Clock) -> RingCursor {
        let mut cur = RingCursor::default();
        self.prepare(clock, &mut cur);
        cur.enter_block(0);
        cur
    }

    fn rings_until_horizon(&self, clock: Clock) -> Vec<Ring> {
        let mut all = Vec::new();
        if self.rate(clock) == 0.0 {
            return all;
        }
        let mut cur = self.start(clock);
        loop {
            self.step(clock, &mut cur);
            if cur.ring.time > self.t_max {
                return all;
            }
            all.push(cur.ring);
        }
    }

    /// Recovery marks at `v` in `[0, t_max]`.
    pub fn recovery_times(&self, v: u32) -> Vec<f64> {
        self.rings_until_horizon(Clock::Recovery(v))
            .into_iter()
            .map(|r| r.time)
            .collect()
    }

    /// Arrows `u -> w` in `[0, t_max]` as `(time, mark)`. Empty if `u` and `w`
    /// are not adjacent.
    pub fn arrows(&self, u: u32, w: u32) -> Vec<(f64, f64)> {
        let Ok(slot) = self.graph.neighbors(w).binary_search(&u) else {
            return Vec::new();
        };
        let deg = self.graph.degree(w);
        self.rings_until_horizon(Clock::Incoming(w))
            .into_iter()
            .map(|r| (r.time, r.source_and_mark(deg)))
            .filter(|&(_, (s, _))| s == slot)
            .map(|(t, (_, m))| (t, m))
            .collect()
    }
}
