//! The three polariton branches of `ω n(ω, k) = c|k|`.
//!
//! The unknown is always the two-photon detuning Δω; the absolute frequency
//! is reconstructed from it. At fixed `k` the index depends on ω only through
//! Δω, and `n²` is a monotone function of Δω between its poles, so each
//! branch has one transmission window and at most one root inside it.

use alloc::vec::Vec;

// Resolves inherently whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::{C, HBAR};
use crate::error::{Error, Result};
use crate::medium::{
    control_mismatch, index_squared_at, polarizability, polarizability_beta_derivative, polarizability_derivative,
    refractive_index_squared,
    refractive_index_squared_derivative, resonance_poles, Detunings, MediumParams,
    DETUNING_WARN_RATIO,
};
use crate::roots::{bisect, positive_windows, stretched_grid};

/// Sign-scan resolution used when callers do not choose one.
pub const DEFAULT_SCAN_RESOLUTION: usize = 1024;
/// Bisection stops once the Δω bracket is below this fraction of Ω_c.
pub const BISECTION_TOLERANCE: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 60;
/// Bound on `|ω n − c|k|| / (c|k|)` for every returned solution.
pub const RESIDUAL_BOUND: f64 = 1e-10;

const FIXED_POINT_MAX_ITER: usize = 100;

/// Polariton branch, numbered bottom to top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    /// Below the lower doublet resonance Δω₋.
    Lower,
    /// Between the resonances; contains the dark-state point Δω = 0.
    Slow,
    /// Above the upper resonance Δω₊.
    Upper,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Lower, Branch::Slow, Branch::Upper];

    pub fn index(self) -> u8 {
        match self {
            Branch::Lower => 1,
            Branch::Slow => 2,
            Branch::Upper => 3,
        }
    }

    pub fn from_index(m: u8) -> Option<Self> {
        match m {
            1 => Some(Branch::Lower),
            2 => Some(Branch::Slow),
            3 => Some(Branch::Upper),
            _ => None,
        }
    }

    /// Branch whose detuning range contains `delta_omega`.
    pub fn classify(rabi: f64, beta: f64, delta_omega: f64) -> Self {
        let (lo, hi) = resonance_poles(rabi, beta);
        if delta_omega < lo {
            Branch::Lower
        } else if delta_omega > hi {
            Branch::Upper
        } else {
            Branch::Slow
        }
    }
}

/// Open Δω interval (rad/s) on which `n² > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub branch: Branch,
    pub lower: f64,
    pub upper: f64,
}

impl Window {
    pub fn contains(&self, delta_omega: f64) -> bool {
        self.lower <= delta_omega && delta_omega <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchWindows {
    /// Resonances `(Δω₋, Δω₊)` of the polarizability (rad/s).
    pub poles: (f64, f64),
    /// Control mismatch β at the scanned wavevector (rad/s).
    pub beta: f64,
    /// Transmission windows in increasing Δω.
    pub windows: Vec<Window>,
}

impl BranchWindows {
    pub fn get(&self, branch: Branch) -> Option<&Window> {
        let mut candidates = self.windows.iter().filter(|w| w.branch == branch);
        if branch == Branch::Slow {
            candidates.find(|w| w.contains(0.0))
        } else {
            candidates.next()
        }
    }
}

/// One point on a dispersion branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSolution {
    pub branch: Branch,
    /// Probe wavevector (rad/m).
    pub k: f64,
    /// Eigenfrequency (rad/s).
    pub omega: f64,
    /// Two-photon detuning at the solution (rad/s).
    pub delta_omega: f64,
    /// Control mismatch at the solution (rad/s).
    pub beta: f64,
    pub n: f64,
    /// Radiative group velocity `c/(n + ω ∂n/∂ω)` (m/s).
    pub v_g: f64,
    /// Full group velocity `∂ω/∂k` including atomic drift (m/s).
    pub v_full: f64,
}

impl BranchSolution {
    pub fn detunings(&self) -> Detunings {
        Detunings::new(self.delta_omega, self.beta)
    }

    /// `|ω n − c|k|| / (c|k|)`.
    pub fn residual(&self) -> f64 {
        let ck = C * self.k.abs();
        (self.omega * self.n - ck).abs() / ck
    }

    /// Frequency relative to `ω_c + ω_q`, without the rounding of `omega`.
    pub fn frame_frequency(&self, params: &MediumParams) -> f64 {
        params.recoil(self.k - params.k_c) + self.delta_omega
    }
}

/// Scans `n²(Δω)` at wavevector `k` for the three transmission windows.
///
/// The scan runs on grids that refine geometrically toward both resonances
/// and extends beyond them to `10⁻³ ω_c`, where the polarizability formula
/// stops being valid. Window edges are refined by bisection.
pub fn branch_windows(params: &MediumParams, k: f64, scan_resolution: usize) -> Result<BranchWindows> {
    if scan_resolution < 1000 {
        return Err(Error::InvalidParameter { name: "scan_resolution", reason: "must be at least 1000" });
    }
    let beta = control_mismatch(params, k);
    let (lo, hi) = resonance_poles(params.rabi, beta);
    let reach = (DETUNING_WARN_RATIO * params.omega_c).max(100.0 * lo.abs().max(hi.abs()));
    let inside = |dw: f64| matches!(index_squared_at(params, &Detunings::new(dw, beta)), Ok(n2) if n2 > 0.0);
    let tol = 1e-13 * params.rabi;
    let min_width = 1e-9 * params.rabi;

    let mut windows = Vec::with_capacity(3);
    let segments = [(-reach, lo, Branch::Lower), (lo, hi, Branch::Slow), (hi, reach, Branch::Upper)];
    for (a, b, branch) in segments {
        let mut grid = stretched_grid(a, b, scan_resolution, 14.0);
        match branch {
            Branch::Lower => grid.insert(0, a),
            Branch::Upper => grid.push(b),
            Branch::Slow => {}
        }
        for (lower, upper) in positive_windows(&grid, inside, tol, min_width)? {
            windows.push(Window { branch, lower, upper });
        }
    }
    Ok(BranchWindows { poles: (lo, hi), beta, windows })
}

/// `ω²n² − c²k²` along Δω at fixed `k`.
fn dispersion_function(params: &MediumParams, k: f64, beta: f64, delta_omega: f64) -> Result<f64> {
    let n2 = index_squared_at(params, &Detunings::new(delta_omega, beta))?;
    let omega = params.probe_frequency(delta_omega, k);
    let ck = C * k;
    Ok(omega * omega * n2 - ck * ck)
}

fn solve_in_window(params: &MediumParams, k: f64, beta: f64, window: &Window) -> Result<BranchSolution> {
    let g = |dw: f64| dispersion_function(params, k, beta, dw);
    let mut grid = stretched_grid(window.lower, window.upper, 64, 12.0);
    grid.insert(0, window.lower);
    grid.push(window.upper);

    let no_root = Error::NoRootInWindow { branch: window.branch, lower: window.lower, upper: window.upper };
    let mut prev = (grid[0], g(grid[0])?);
    let mut bracket = None;
    for &dw in &grid[1..] {
        let val = g(dw)?;
        if prev.1 == 0.0 {
            bracket = Some((prev.0, prev.0));
            break;
        }
        if prev.1.signum() != val.signum() {
            bracket = Some((prev.0, dw));
            break;
        }
        prev = (dw, val);
    }
    let (a, b) = bracket.ok_or(no_root)?;
    let dw = if a == b {
        a
    } else {
        bisect(a, b, g, BISECTION_TOLERANCE * params.rabi, BISECTION_MAX_ITER)?
    };
    let sol = build_solution(params, window.branch, k, dw, beta)?;
    let residual = sol.residual();
    if !(residual < RESIDUAL_BOUND) {
        return Err(Error::Residual { relative: residual });
    }
    Ok(sol)
}

fn build_solution(params: &MediumParams, branch: Branch, k: f64, delta_omega: f64, beta: f64) -> Result<BranchSolution> {
    let n2 = index_squared_at(params, &Detunings::new(delta_omega, beta))?;
    if n2 <= 0.0 {
        return Err(Error::StopBand { delta_omega, n_squared: n2 });
    }
    let mut sol = BranchSolution {
        branch,
        k,
        omega: params.probe_frequency(delta_omega, k),
        delta_omega,
        beta,
        n: n2.sqrt(),
        v_g: 0.0,
        v_full: 0.0,
    };
    sol.v_g = radiative_group_velocity(params, &sol)?;
    sol.v_full = full_group_velocity(params, &sol)?;
    Ok(sol)
}

/// Eigenfrequency `ω_k^(m)` of branch `branch` at wavevector `k`.
pub fn frequency_of_wavevector(params: &MediumParams, k: f64, branch: Branch) -> Result<BranchSolution> {
    let windows = branch_windows(params, k, DEFAULT_SCAN_RESOLUTION)?;
    solve_with_windows(params, k, branch, &windows)
}

/// Like [`frequency_of_wavevector`], reusing windows already scanned at `k`.
pub fn solve_with_windows(params: &MediumParams, k: f64, branch: Branch, windows: &BranchWindows) -> Result<BranchSolution> {
    let window = windows.get(branch).ok_or(Error::MissingWindow { branch })?;
    solve_in_window(params, k, windows.beta, window)
}

/// Wavevector at which a probe of absolute frequency `omega` propagates.
///
/// `n` depends on `k` only through recoil, so `k ← ω n(ω, k)/c` converges in
/// a few steps. The sign of `k_seed` selects the propagation direction.
pub fn wavevector_of_frequency(params: &MediumParams, omega: f64, k_seed: f64) -> Result<f64> {
    let sign = if k_seed < 0.0 { -1.0 } else { 1.0 };
    let mut k = k_seed;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let d = Detunings::from_frequency(params, omega, k);
        let n2 = refractive_index_squared(params, polarizability(params, &d)?)?;
        if n2 <= 0.0 {
            return Err(Error::StopBand { delta_omega: d.delta_omega, n_squared: n2 });
        }
        let next = sign * omega * n2.sqrt() / C;
        if (next - k).abs() <= 1e-13 * next.abs() {
            return Ok(next);
        }
        k = next;
    }
    Err(Error::NoConvergence { iterations: FIXED_POINT_MAX_ITER })
}

/// The propagating mode whose two-photon detuning is `delta_omega`.
///
/// Iterates `k ← ω(Δω, k) n(Δω, β(k))/c`; the branch is read off from where
/// Δω sits relative to the resonances.
pub fn solve_at_detuning(params: &MediumParams, delta_omega: f64, k_seed: f64) -> Result<BranchSolution> {
    let sign = if k_seed < 0.0 { -1.0 } else { 1.0 };
    let mut k = k_seed;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let beta = control_mismatch(params, k);
        let n2 = index_squared_at(params, &Detunings::new(delta_omega, beta))?;
        if n2 <= 0.0 {
            return Err(Error::StopBand { delta_omega, n_squared: n2 });
        }
        let next = sign * params.probe_frequency(delta_omega, k) * n2.sqrt() / C;
        if (next - k).abs() <= 1e-13 * next.abs() {
            let beta = control_mismatch(params, next);
            let branch = Branch::classify(params.rabi, beta, delta_omega);
            return build_solution(params, branch, next, delta_omega, beta);
        }
        k = next;
    }
    Err(Error::NoConvergence { iterations: FIXED_POINT_MAX_ITER })
}

/// `∂n/∂ω` at fixed `k`, via the chain rule through α(Δω).
pub fn index_frequency_derivative(params: &MediumParams, sol: &BranchSolution) -> Result<f64> {
    let d = sol.detunings();
    let alpha = polarizability(params, &d)?;
    let dn2 = refractive_index_squared_derivative(params, alpha)? * polarizability_derivative(params, &d)?;
    Ok(dn2 / (2.0 * sol.n))
}

/// `v_g = c/(n + ω ∂n/∂ω)`.
pub fn radiative_group_velocity(params: &MediumParams, sol: &BranchSolution) -> Result<f64> {
    let dn = index_frequency_derivative(params, sol)?;
    Ok(C / (sol.n + sol.omega * dn))
}

/// Exact `dω/dk` along the branch:
///
/// ```text
/// ±v_g + (ħ(k − k_c)/M)(1 − n v_g/c) + (v_g/c) ω (∂n/∂β)(ħk_c/M)
/// ```
///
/// The sign follows the propagation direction of the probe. The last term
/// comes from the recoil of the excited state entering β; it vanishes at
/// Δω = 0 and is ~10⁻⁴ of v_g at |Δω| = Ω_c/2. Dropping both corrections
/// leaves the familiar `v_g + ħ(k − k_c)/M`.
pub fn full_group_velocity(params: &MediumParams, sol: &BranchSolution) -> Result<f64> {
    let direction = if sol.k < 0.0 { -1.0 } else { 1.0 };
    let d = sol.detunings();
    let dn_dbeta = refractive_index_squared_derivative(params, polarizability(params, &d)?)?
        * polarizability_beta_derivative(params, &d)?
        / (2.0 * sol.n);
    let drift = HBAR * (sol.k - params.k_c) / params.mass;
    let excited_recoil = (sol.v_g / C) * sol.omega * dn_dbeta * HBAR * params.k_c / params.mass;
    Ok(direction * sol.v_g + drift * (1.0 - sol.n * sol.v_g / C) + excited_recoil)
}

/// Solutions of all three branches along a uniform `k` grid.
#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub lower: Vec<BranchSolution>,
    pub slow: Vec<BranchSolution>,
    pub upper: Vec<BranchSolution>,
    /// Grid points at which a branch had no solution, with the reason.
    pub failures: Vec<(Branch, f64, Error)>,
}

impl Sweep {
    pub fn branch(&self, branch: Branch) -> &[BranchSolution] {
        match branch {
            Branch::Lower => &self.lower,
            Branch::Slow => &self.slow,
            Branch::Upper => &self.upper,
        }
    }

    /// All solutions, branch by branch, each in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = &BranchSolution> {
        self.lower.iter().chain(self.slow.iter()).chain(self.upper.iter())
    }
}

/// Sweeps `samples` wavevectors uniformly over `k_range` (inclusive).
/// Failures at individual points are collected rather than aborting.
pub fn dispersion_sweep(params: &MediumParams, k_range: (f64, f64), samples: usize) -> Result<Sweep> {
    if samples < 2 {
        return Err(Error::InvalidParameter { name: "samples", reason: "a sweep needs at least 2 samples" });
    }
    let (k_lo, k_hi) = k_range;
    let mut sweep = Sweep::default();
    for i in 0..samples {
        let k = k_lo + (k_hi - k_lo) * (i as f64 / (samples - 1) as f64);
        let windows = match branch_windows(params, k, DEFAULT_SCAN_RESOLUTION) {
            Ok(w) => w,
            Err(e) => {
                for b in Branch::ALL {
                    sweep.failures.push((b, k, e.clone()));
                }
                continue;
            }
        };
        for branch in Branch::ALL {
            match solve_with_windows(params, k, branch, &windows) {
                Ok(sol) => match branch {
                    Branch::Lower => sweep.lower.push(sol),
                    Branch::Slow => sweep.slow.push(sol),
                    Branch::Upper => sweep.upper.push(sol),
                },
                Err(e) => sweep.failures.push((branch, k, e)),
            }
        }
    }
    Ok(sweep)
}

/// Wavevector of the dark-state point `Δω = 0`, travelling in the direction of `k_seed`.
pub fn resonant_wavevector(params: &MediumParams, k_seed: f64) -> Result<f64> {
    Ok(solve_at_detuning(params, 0.0, k_seed)?.k)
}
