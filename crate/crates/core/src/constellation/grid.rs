//! Regular grids: boustrophedon ordering and point location.

/// Coordinates of the `index`-th cell of a grid with `counts[k]` cells along
/// axis `k`, in boustrophedon order. Axis `d-1` varies slowest; each faster
/// axis is traversed backwards whenever the coordinates above it sum to an odd
/// number. Consecutive cells share a face and cell 0 is the origin.
pub fn snake_coords(index: u64, counts: &[u64]) -> Vec<u64> {
    let d = counts.len();
    let mut digits = vec![0u64; d];
    let mut rest = index;
    for k in 0..d {
        digits[k] = rest % counts[k];
        rest /= counts[k];
    }
    let mut coords = vec![0u64; d];
    let mut above = 0u64;
    for k in (0..d).rev() {
        coords[k] = if above.is_multiple_of(2) {
            digits[k]
        } else {
            counts[k] - 1 - digits[k]
        };
        above += coords[k];
    }
    coords
}

/// Inverse of [`snake_coords`].
pub fn snake_index(coords: &[u64], counts: &[u64]) -> u64 {
    let d = counts.len();
    let mut digits = vec![0u64; d];
    let mut above = 0u64;
    for k in (0..d).rev() {
        digits[k] = if above.is_multiple_of(2) {
            coords[k]
        } else {
            counts[k] - 1 - coords[k]
        };
        above += coords[k];
    }
    (0..d).rev().fold(0u64, |acc, k| acc * counts[k] + digits[k])
}

/// Row-major linear index with axis 0 fastest.
pub fn linear_index(coords: &[u64], counts: &[u64]) -> u64 {
    (0..counts.len()).rev().fold(0u64, |acc, k| acc * counts[k] + coords[k])
}

pub fn linear_coords(mut index: u64, counts: &[u64]) -> Vec<u64> {
    counts
        .iter()
        .map(|&c| {
            let x = index % c;
            index /= c;
            x
        })
        .collect()
}

/// Index `j < count` of the cell `[origin + j len, origin + (j+1) len)`
/// containing `x`, with the bounds evaluated exactly as the cells define them.
pub fn locate(x: f64, origin: f64, len: f64, count: u64) -> Option<u64> {
    if x < origin {
        return None;
    }
    let guess = ((x - origin) / len).floor();
    if !(guess >= 0.0) {
        return None;
    }
    let mut j = guess as u64;
    while j > 0 && x < origin + j as f64 * len {
        j -= 1;
    }
    while x >= origin + (j + 1) as f64 * len {
        j += 1;
    }
    (j < count).then_some(j)
}
