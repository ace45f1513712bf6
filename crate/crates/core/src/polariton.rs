//! Mode composition and lifetime of a polariton.
//!
//! A polariton on branch `m` at wavevector `k` is
//!
//! ```text
//! P = √(v_g/c)·[(n+1)a_k + (n−1)a†_−k]/2 + i u b_q + i u (Δω/Ω_c) b_e
//! ```
//!
//! with `u = (1 − n v_g/c)^½ [1 + (Δω/Ω_c)²]^−½`. Bose commutation fixes
//! `photon_plus² − photon_minus² + u²[1 + (Δω/Ω_c)²] = 1`.

// Resolves inherently whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::C;
use crate::dispersion::BranchSolution;
use crate::error::{Error, Result};
use crate::medium::{Detunings, MediumParams};

/// Slack allowed on `n v_g/c ≤ 1` before the solution is rejected.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonComposition {
    /// Spin-excitation amplitude.
    pub u: f64,
    /// Co-propagating photon coefficient `√(v_g/c)(n+1)/2`.
    pub photon_plus: f64,
    /// Counter-rotating photon coefficient `√(v_g/c)(n−1)/2`.
    pub photon_minus: f64,
    /// Excited-state amplitude `u Δω/Ω_c`.
    pub excited: f64,
    /// `Δω/Ω_c` at which the composition was evaluated.
    pub detuning_ratio: f64,
    /// Population decay rate Γ (s⁻¹).
    pub gamma: f64,
}

impl PolaritonComposition {
    /// Quasiparticle fraction carried by the radiation field, `n v_g/c`.
    pub fn radiative_weight(&self) -> f64 {
        self.photon_plus * self.photon_plus - self.photon_minus * self.photon_minus
    }

    /// Fraction in the spin excitation, `u²`.
    pub fn spin_weight(&self) -> f64 {
        self.u * self.u
    }

    /// Fraction in the excited state, `u²(Δω/Ω_c)²`.
    pub fn excited_weight(&self) -> f64 {
        self.excited * self.excited
    }
}

/// `u = (1 − n v_g/c)^½ [1 + (Δω/Ω_c)²]^−½`.
pub fn hopfield_u(params: &MediumParams, sol: &BranchSolution) -> Result<f64> {
    let radiative = sol.n * sol.v_g / C;
    if radiative > 1.0 + DOMAIN_SLACK || radiative.is_nan() {
        return Err(Error::Domain { n_vg_over_c: radiative });
    }
    let ratio = sol.delta_omega / params.rabi;
    Ok((1.0 - radiative).max(0.0).sqrt() / (1.0 + ratio * ratio).sqrt())
}

pub fn composition(params: &MediumParams, sol: &BranchSolution) -> Result<PolaritonComposition> {
    let u = hopfield_u(params, sol)?;
    let ratio = sol.delta_omega / params.rabi;
    let amp = (sol.v_g / C).sqrt();
    let mut comp = PolaritonComposition {
        u,
        photon_plus: amp * (sol.n + 1.0) / 2.0,
        photon_minus: amp * (sol.n - 1.0) / 2.0,
        excited: u * ratio,
        detuning_ratio: ratio,
        gamma: 0.0,
    };
    comp.gamma = decay_rate(params, &comp, &sol.detunings());
    Ok(comp)
}

/// `Γ = u²(Δω/Ω_c)²Γ₀`, the rate at which the excited-state admixture
/// radiates the polariton away.
pub fn decay_rate(params: &MediumParams, comp: &PolaritonComposition, d: &Detunings) -> f64 {
    let ratio = d.ratio(params);
    comp.u * comp.u * ratio * ratio * params.gamma0
}

/// `photon_plus² − photon_minus² + u²[1 + (Δω/Ω_c)²] − 1`.
pub fn normalization_residual(comp: &PolaritonComposition) -> f64 {
    let r = comp.detuning_ratio;
    comp.radiative_weight() + comp.u * comp.u * (1.0 + r * r) - 1.0
}
