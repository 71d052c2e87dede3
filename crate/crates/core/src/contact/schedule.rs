//! Earliest pending time over a fixed set of clocks.

/// Slots at or below this count are scanned linearly instead of kept in a tree.
const FLAT_LIMIT: usize = 32;

/// Tournament tree over `n` slots. Every slot holds a time, `+inf` when idle;
/// ties go to the lower slot.
#[derive(Debug, Default, Clone)]
pub(crate) struct Tournament {
    len: usize,
    leaves: usize,
    times: Vec<f64>,
    /// `winners[j]` is the best slot under node `j`; leaves sit at
    /// `leaves..2 * leaves`.
    winners: Vec<u32>,
}

impl Tournament {
    /// All slots idle.
    pub fn reset(&mut self, n: usize) {
        let leaves = n.next_power_of_two().max(1);
        self.len = n.max(1);
        if self.leaves != leaves {
            self.leaves = leaves;
            self.winners = vec![0; 2 * leaves];
            self.times = vec![f64::INFINITY; leaves];
        } else {
            self.times.fill(f64::INFINITY);
        }
        for i in 0..leaves {
            self.winners[leaves + i] = i as u32;
        }
        for j in (1..leaves).rev() {
            self.winners[j] = self.winners[2 * j];
        }
    }

    #[inline]
    pub fn min(&self) -> (u32, f64) {
        if self.leaves <= FLAT_LIMIT {
            let times = &self.times[..self.len];
            let mut best = (0u32, times[0]);
            for (i, &t) in times.iter().enumerate().skip(1) {
                if t < best.1 {
                    best = (i as u32, t);
                }
            }
            return best;
        }
        let w = self.winners[1];
        (w, self.times[w as usize])
    }

    #[inline]
    pub fn set(&mut self, slot: u32, time: f64) {
        let i = slot as usize;
        self.times[i] = time;
        if self.leaves <= FLAT_LIMIT {
            return;
        }
        let mut j = (self.leaves + i) / 2;
        while j >= 1 {
            let (a, b) = (self.winners[2 * j], self.winners[2 * j + 1]);
            let w = if self.times[b as usize] < self.times[a as usize] { b } else { a };
            if w == self.winners[j] && w != slot {
                // Nothing above this node can change.
                break;
            }
            self.winners[j] = w;
            j /= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn min_matches_linear_scan(
            n in 1usize..80,
            ops in prop::collection::vec((0usize..80, prop::option::of(0.0f64..100.0)), 1..200),
        ) {
            let mut t = Tournament::default();
            t.reset(n);
            let mut reference = vec![f64::INFINITY; n];
            for (slot, time) in ops {
                let slot = slot % n;
                let time = time.unwrap_or(f64::INFINITY);
                t.set(slot as u32, time);
                reference[slot] = time;
                let best = (0..n).fold(0, |b, i| if reference[i] < reference[b] { i } else { b });
                let (w, tw) = t.min();
                prop_assert_eq!(tw, reference[best]);
                if tw.is_finite() {
                    prop_assert_eq!(w as usize, best);
                }
            }
        }
    }

    #[test]
    fn single_slot() {
        let mut t = Tournament::default();
        t.reset(1);
        assert_eq!(t.min(), (0, f64::INFINITY));
        t.set(0, 2.5);
        assert_eq!(t.min(), (0, 2.5));
    }
}
