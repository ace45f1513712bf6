//! Bracketing helpers: sign scans on stretched grids and bisection.

use alloc::vec::Vec;

// Resolves inherently whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Grid on the open interval `(a, b)` whose spacing shrinks geometrically
/// toward both ends, down to `10⁻ᵈᵉᶜᵃᵈᵉˢ·(b − a)`.
pub fn stretched_grid(a: f64, b: f64, points: usize, decades: f64) -> Vec<f64> {
    let half = (points / 2).max(2);
    let w = b - a;
    let span = 10f64.powf(decades) - 1.0;
    let mut grid = Vec::with_capacity(2 * half);
    for i in 1..=half {
        let t = i as f64 / half as f64;
        grid.push(a + 0.5 * w * ((10f64.powf(decades * t) - 1.0) / span));
    }
    for i in (1..half).rev() {
        let t = i as f64 / half as f64;
        grid.push(b - 0.5 * w * ((10f64.powf(decades * t) - 1.0) / span));
    }
    grid
}

/// Bisection on a sign predicate. `inside` must hold at `good` and fail at
/// `bad`; returns the last point where it holds.
pub fn refine_edge(mut good: f64, mut bad: f64, inside: impl Fn(f64) -> bool, tol: f64) -> f64 {
    for _ in 0..200 {
        if (good - bad).abs() <= tol {
            break;
        }
        let mid = 0.5 * (good + bad);
        if mid == good || mid == bad {
            break;
        }
        if inside(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Maximal intervals of `grid` on which `inside` holds, with both edges
/// refined to `tol`. Windows narrower than `min_width` are an error rather
/// than being dropped.
pub fn positive_windows(
    grid: &[f64],
    inside: impl Fn(f64) -> bool,
    tol: f64,
    min_width: f64,
) -> Result<Vec<(f64, f64)>> {
    let flags: Vec<bool> = grid.iter().map(|&x| inside(x)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < grid.len() {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < grid.len() && flags[i + 1] {
            i += 1;
        }
        let end = i;
        let lower = if start == 0 { grid[0] } else { refine_edge(grid[start], grid[start - 1], &inside, tol) };
        let upper =
            if end + 1 == grid.len() { grid[end] } else { refine_edge(grid[end], grid[end + 1], &inside, tol) };
        if upper - lower < min_width {
            return Err(Error::DegenerateWindow { lower, upper });
        }
        out.push((lower, upper));
        i += 1;
    }
    Ok(out)
}

/// Bisection for a root of `f` in `[lo, hi]` with `f(lo) < 0 < f(hi)` or the
/// reverse. Stops after `max_iter` halvings or once the bracket is below `tol`.
pub fn bisect(
    mut lo: f64,
    mut hi: f64,
    f: impl Fn(f64) -> Result<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoConvergence { iterations: 0 });
    }
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
