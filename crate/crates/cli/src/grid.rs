//! Brute-force grid minimizers used as independent oracles for the two-node
//! optimizers.
//!
//! Each level evaluates `points` equally spaced values (in parallel), then
//! zooms onto the two cells around the best one. Ties resolve to the lowest
//! index, so results do not depend on thread scheduling.

use rayon::prelude::*;

pub const LEVELS: usize = 5;

/// `(argmin, min)` of `f` over `[lo, hi]`.
pub fn minimize_1d<F>(f: F, lo: f64, hi: f64, points: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, f(lo));
    for _ in 0..LEVELS {
        let h = (b - a) / (points - 1) as f64;
        let level = (0..points)
            .into_par_iter()
            .map(|i| {
                let x = a + h * i as f64;
                (x, f(x))
            })
            .reduce(|| (f64::NAN, f64::INFINITY), |p, q| if q.1 < p.1 { q } else { p });
        if level.1 < best.1 {
            best = level;
        }
        a = (best.0 - h).max(lo);
        b = (best.0 + h).min(hi);
    }
    best
}

/// `((x, y), min)` of `f` over a rectangle, by nested 1-D zoom grids.
pub fn minimize_2d<F>(f: F, x_range: (f64, f64), y_range: (f64, f64), points: usize) -> ((f64, f64), f64)
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let inner = |x: f64| minimize_1d(|y| f(x, y), y_range.0, y_range.1, points);
    let (x, value) = minimize_1d(|x| inner(x).1, x_range.0, x_range.1, points);
    ((x, inner(x).0), value)
}
