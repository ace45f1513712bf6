use core::fmt;

use crate::dispersion::Branch;

pub type Result<T> = core::result::Result<T, Error>;

/// Which denominator vanished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pole {
    /// `Δω² + βΔω − Ω_c² = 0`; carries both roots `Δω₋ < Δω₊` (rad/s).
    Resonance { lower: f64, upper: f64 },
    /// `1 − (1 − x)αρ/ε₀ = 0`; carries the polarizability at the pole (C·m²/V).
    LocalField { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidParameter { name: &'static str, reason: &'static str },
    Pole(Pole),
    /// `n² ≤ 0` at the requested detuning (rad/s): no propagating mode.
    StopBand { delta_omega: f64, n_squared: f64 },
    NoConvergence { iterations: usize },
    /// The dispersion function has no sign change inside the branch window.
    NoRootInWindow { branch: Branch, lower: f64, upper: f64 },
    MissingWindow { branch: Branch },
    /// A transmission window narrower than the scan tolerance (rad/s).
    DegenerateWindow { lower: f64, upper: f64 },
    /// `n v_g / c` exceeded one, so the spin amplitude is undefined.
    Domain { n_vg_over_c: f64 },
    /// The requested probe band does not fit in the slow-branch window.
    BandTooWide { lower: f64, upper: f64, window_lower: f64, window_upper: f64 },
    WrongStage { expected: &'static str, found: &'static str },
    /// A solution violated the dispersion residual bound.
    Residual { relative: f64 },
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pole::Resonance { lower, upper } => write!(
                f,
                "polarizability pole: Δω² + βΔω − Ω_c² vanishes (poles at {lower:e} and {upper:e} rad/s)"
            ),
            Pole::LocalField { alpha } => {
                write!(f, "local-field pole: 1 − (1−x)αρ/ε₀ vanishes at α = {alpha:e} C·m²/V")
            }
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid parameter `{name}`: {reason}"),
            Error::Pole(p) => p.fmt(f),
            Error::StopBand { delta_omega, n_squared } => {
                write!(f, "stop band at Δω = {delta_omega:e} rad/s (n² = {n_squared:e})")
            }
            Error::NoConvergence { iterations } => write!(f, "no convergence after {iterations} iterations"),
            Error::NoRootInWindow { branch, lower, upper } => write!(
                f,
                "no root of ω²n² − c²k² on branch {} in window [{lower:e}, {upper:e}] rad/s",
                branch.index()
            ),
            Error::MissingWindow { branch } => write!(f, "branch {} has no transmission window", branch.index()),
            Error::DegenerateWindow { lower, upper } => {
                write!(f, "degenerate transmission window [{lower:e}, {upper:e}] rad/s")
            }
            Error::Domain { n_vg_over_c } => write!(f, "n·v_g/c = {n_vg_over_c} exceeds 1"),
            Error::BandTooWide { lower, upper, window_lower, window_upper } => write!(
                f,
                "probe band [{lower:e}, {upper:e}] rad/s exceeds slow-branch window [{window_lower:e}, {window_upper:e}] rad/s"
            ),
            Error::WrongStage { expected, found } => write!(f, "expected a {expected} packet, found {found}"),
            Error::Residual { relative } => write!(f, "dispersion residual {relative:e} above bound"),
        }
    }
}

impl core::error::Error for Error {}
