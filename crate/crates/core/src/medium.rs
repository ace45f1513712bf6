//! Medium parameters and the microscopic response of the dressed Λ gas.
//!
//! All frequencies are angular (rad/s) and wavevectors are signed scalars
//! (rad/m) along the common propagation axis of probe and control beams.
//!
//! Large carrier frequencies (~10¹⁵ rad/s) and small detunings (~10⁷ rad/s)
//! meet in the same expressions, so sums are ordered to keep the detunings
//! exact: carrier differences are formed first, recoil terms last.

// Resolves inherently whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::{EPS0, HBAR};
use crate::error::{Error, Pole, Result};

/// Default local-field factor of the contact interaction.
pub const DEFAULT_LOCAL_FIELD: f64 = 2.0 / 3.0;

/// Relative tolerance for vanishing denominators, in units of `Ω_c²` for the
/// polarizability and of 1 for the local-field factor.
pub const POLE_TOLERANCE: f64 = 1e-9;

/// Detunings above this fraction of `ω_c` leave the regime where the
/// polarizability formula holds.
pub const DETUNING_WARN_RATIO: f64 = 1e-3;

/// Physical description of the condensate and the control beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Number density ρ (m⁻³).
    pub density: f64,
    /// Transition dipole μ of g → e (C·m).
    pub dipole: f64,
    /// Bare excited-state frequency (rad/s).
    pub omega_e: f64,
    /// Bare hyperfine-state frequency (rad/s).
    pub omega_q: f64,
    /// Control laser frequency (rad/s).
    pub omega_c: f64,
    /// Control Rabi frequency Ω_c (rad/s).
    pub rabi: f64,
    /// Control wavevector (rad/m).
    pub k_c: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Radiative decay rate Γ₀ of the excited state (s⁻¹).
    pub gamma0: f64,
    /// Local-field factor x of the contact interaction.
    pub local_field: f64,
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &'static str, &'static str); 9] = [
            (self.density > 0.0, "rho", "number density must be > 0 (m^-3)"),
            (self.dipole > 0.0, "mu", "dipole moment must be > 0 (C·m)"),
            (self.rabi > 0.0, "Omega_c", "Rabi frequency must be > 0 (rad/s)"),
            (self.mass > 0.0, "M", "atomic mass must be > 0 (kg)"),
            (self.gamma0 >= 0.0, "Gamma0", "decay rate must be >= 0 (s^-1)"),
            ((0.0..=1.0).contains(&self.local_field), "x", "local-field factor must lie in [0, 1]"),
            (self.omega_q >= 0.0, "omega_q", "hyperfine frequency must be >= 0 (rad/s)"),
            (self.omega_e > self.omega_q, "omega_e", "excited frequency must exceed omega_q (rad/s)"),
            (self.omega_c > 0.0, "omega_c", "control frequency must be > 0 (rad/s)"),
        ];
        for (ok, name, reason) in checks {
            if !ok {
                return Err(Error::InvalidParameter { name, reason });
            }
        }
        let finite = [
            self.density, self.dipole, self.omega_e, self.omega_q, self.omega_c, self.rabi, self.k_c,
            self.mass, self.gamma0, self.local_field,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter { name: "medium", reason: "all parameters must be finite" });
        }
        Ok(())
    }

    /// Same medium, new control beam.
    pub fn with_control(&self, rabi: f64, k_c: f64) -> Self {
        Self { rabi, k_c, ..*self }
    }

    pub fn with_density(&self, density: f64) -> Self {
        Self { density, ..*self }
    }

    pub fn with_local_field(&self, local_field: f64) -> Self {
        Self { local_field, ..*self }
    }

    /// Recoil shift `ħk²/2M` (rad/s).
    pub fn recoil(&self, k: f64) -> f64 {
        HBAR * k * k / (2.0 * self.mass)
    }

    /// Frame frequency `ω_c + ω_q`; every phase in the protocol is measured
    /// relative to it.
    pub fn reference_frequency(&self) -> f64 {
        self.omega_c + self.omega_q
    }

    /// Probe frequency `ω = ω_c + ω_{q,k−k_c} + Δω` (rad/s).
    pub fn probe_frequency(&self, delta_omega: f64, k: f64) -> f64 {
        self.omega_c + (self.omega_q + (self.recoil(k - self.k_c) + delta_omega))
    }

    /// `μ²/ħ`, the oscillator strength scale of the polarizability.
    fn strength(&self) -> f64 {
        self.dipole * self.dipole / HBAR
    }
}

/// Internal level carrying a recoil-shifted excitation frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Q,
    E,
}

/// `ω_{j,k} = ω_j + ħk²/2M`.
pub fn atomic_excitation_frequency(params: &MediumParams, level: Level, k: f64) -> f64 {
    let base = match level {
        Level::Q => params.omega_q,
        Level::E => params.omega_e,
    };
    base + params.recoil(k)
}

/// `Δω = ω − ω_c − ω_{q,k−k_c}`.
pub fn two_photon_detuning(params: &MediumParams, omega: f64, k: f64) -> f64 {
    ((omega - params.omega_c) - params.omega_q) - params.recoil(k - params.k_c)
}

/// `β = ω_{q,k−k_c} + ω_c − ω_{e,k}`.
pub fn control_mismatch(params: &MediumParams, k: f64) -> f64 {
    ((params.omega_c - params.omega_e) + params.omega_q) + (params.recoil(k - params.k_c) - params.recoil(k))
}

/// Two-photon detuning and control mismatch of one probe mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detunings {
    pub delta_omega: f64,
    pub beta: f64,
}

impl Detunings {
    pub fn new(delta_omega: f64, beta: f64) -> Self {
        Self { delta_omega, beta }
    }

    /// Detunings of the mode `k` probed at `Δω` from two-photon resonance.
    pub fn at(params: &MediumParams, delta_omega: f64, k: f64) -> Self {
        Self { delta_omega, beta: control_mismatch(params, k) }
    }

    /// Detunings of the mode `k` probed at absolute frequency `ω`.
    pub fn from_frequency(params: &MediumParams, omega: f64, k: f64) -> Self {
        Self::at(params, two_photon_detuning(params, omega, k), k)
    }

    /// `Δω/Ω_c`.
    pub fn ratio(&self, params: &MediumParams) -> f64 {
        self.delta_omega / params.rabi
    }

    /// False when `|Δω|` exceeds `ratio·ω_c`, where the polarizability formula
    /// is no longer reliable. This is advisory only.
    pub fn within_validity(&self, params: &MediumParams, ratio: f64) -> bool {
        self.delta_omega.abs() <= ratio * params.omega_c
    }
}

/// Roots `Δω₋ < Δω₊` of `Δω² + βΔω − Ω_c² = 0`.
///
/// Computed without cancellation, so `Δω₊Δω₋ = −Ω_c²` and `Δω₊ + Δω₋ = −β`
/// hold to rounding.
pub fn resonance_poles(rabi: f64, beta: f64) -> (f64, f64) {
    let disc = (beta * beta + 4.0 * rabi * rabi).sqrt();
    // q has the sign opposite to β so that −β and ∓disc add without cancelling.
    let q = if beta >= 0.0 { -0.5 * (beta + disc) } else { 0.5 * (disc - beta) };
    let other = -rabi * rabi / q;
    if q < other {
        (q, other)
    } else {
        (other, q)
    }
}

fn resonance_denominator(params: &MediumParams, d: &Detunings, tol: f64) -> Result<f64> {
    let dw = d.delta_omega;
    let den = dw * (dw + d.beta) - params.rabi * params.rabi;
    if den.abs() < tol * params.rabi * params.rabi {
        let (lower, upper) = resonance_poles(params.rabi, d.beta);
        return Err(Error::Pole(Pole::Resonance { lower, upper }));
    }
    Ok(den)
}

/// Atomic polarizability `α = −(μ²/ħ) Δω / (Δω² + βΔω − Ω_c²)` (C·m²/V).
pub fn polarizability(params: &MediumParams, d: &Detunings) -> Result<f64> {
    polarizability_with_tolerance(params, d, POLE_TOLERANCE)
}

pub fn polarizability_with_tolerance(params: &MediumParams, d: &Detunings, tol: f64) -> Result<f64> {
    let den = resonance_denominator(params, d, tol)?;
    Ok(-params.strength() * d.delta_omega / den)
}

/// `dα/dΔω = (μ²/ħ)(Δω² + Ω_c²)/(Δω² + βΔω − Ω_c²)²`, at fixed β.
pub fn polarizability_derivative(params: &MediumParams, d: &Detunings) -> Result<f64> {
    let den = resonance_denominator(params, d, POLE_TOLERANCE)?;
    let dw = d.delta_omega;
    Ok(params.strength() * (dw * dw + params.rabi * params.rabi) / (den * den))
}

/// `∂α/∂β = (μ²/ħ) Δω² / (Δω² + βΔω − Ω_c²)²`, at fixed Δω.
pub fn polarizability_beta_derivative(params: &MediumParams, d: &Detunings) -> Result<f64> {
    let den = resonance_denominator(params, d, POLE_TOLERANCE)?;
    let dw = d.delta_omega;
    Ok(params.strength() * dw * dw / (den * den))
}

/// Local-field corrected `n² = (1 + xαρ/ε₀)/(1 − (1−x)αρ/ε₀)`.
///
/// The result may be negative; `n² ≤ 0` marks a stop band.
pub fn refractive_index_squared(params: &MediumParams, alpha: f64) -> Result<f64> {
    let s = alpha * params.density / EPS0;
    let x = params.local_field;
    let den = 1.0 - (1.0 - x) * s;
    if den.abs() < POLE_TOLERANCE {
        return Err(Error::Pole(Pole::LocalField { alpha }));
    }
    Ok((1.0 + x * s) / den)
}

/// `dn²/dα = (ρ/ε₀)/(1 − (1−x)αρ/ε₀)²`.
pub fn refractive_index_squared_derivative(params: &MediumParams, alpha: f64) -> Result<f64> {
    let s = alpha * params.density / EPS0;
    let den = 1.0 - (1.0 - params.local_field) * s;
    if den.abs() < POLE_TOLERANCE {
        return Err(Error::Pole(Pole::LocalField { alpha }));
    }
    Ok(params.density / EPS0 / (den * den))
}

/// `n²` as a function of the detunings alone.
pub fn index_squared_at(params: &MediumParams, d: &Detunings) -> Result<f64> {
    refractive_index_squared(params, polarizability(params, d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sodium() -> MediumParams {
        presets::hau2001()
    }

    #[test]
    fn recoil_vanishes_at_zero_k() {
        let p = sodium();
        assert_eq!(atomic_excitation_frequency(&p, Level::Q, 0.0), p.omega_q);
        assert_eq!(atomic_excitation_frequency(&p, Level::E, 0.0), p.omega_e);
    }

    #[test]
    fn excitation_frequency_is_even_in_k() {
        let p = sodium();
        for k in [1.0, 37.0, 1.2e5, 1.067e7, -3.3e7] {
            assert_eq!(
                atomic_excitation_frequency(&p, Level::E, k),
                atomic_excitation_frequency(&p, Level::E, -k)
            );
        }
    }

    #[test]
    fn sodium_recoil_shift() {
        // ħk²/2M by hand: 1.054571817e-34 * (1.067e7)^2 / (2 * 3.82e-26) = 1.571490e5
        let p = MediumParams { mass: 3.82e-26, ..sodium() };
        let shift = atomic_excitation_frequency(&p, Level::Q, 1.067e7) - p.omega_q;
        assert_relative_eq!(shift, 1.571490e5, max_relative = 1e-5);
    }

    #[test]
    fn detuning_zero_on_two_photon_resonance() {
        let p = sodium();
        let k = 1.0668e7;
        let omega = p.omega_c + atomic_excitation_frequency(&p, Level::Q, k - p.k_c);
        assert!(two_photon_detuning(&p, omega, k).abs() < 1.0);
        // ω_c + ω_q is itself rounded to half an ulp of ω
        let omega = p.omega_c + p.omega_q;
        assert!(two_photon_detuning(&p, omega, p.k_c).abs() <= 0.5);
    }

    #[test]
    fn detuning_substitution() {
        let p = sodium();
        let k = p.k_c + 37.0;
        let omega = p.omega_c + atomic_excitation_frequency(&p, Level::Q, k - p.k_c) + p.rabi / 50.0;
        // ω carries ~0.5 rad/s of rounding at optical frequencies.
        assert!((two_photon_detuning(&p, omega, k) - p.rabi / 50.0).abs() < 1.0);
    }

    #[test]
    fn mismatch_vanishes_for_resonant_control_without_recoil() {
        let mut p = sodium();
        p.mass = 1e30;
        p.omega_c = p.omega_e - p.omega_q;
        for k in [0.0, p.k_c, -p.k_c, 3.0 * p.k_c] {
            assert!(control_mismatch(&p, k).abs() < 1.0, "β = {}", control_mismatch(&p, k));
        }
    }

    #[test]
    fn mismatch_substitution_and_parity() {
        // Small-scale parameters so the naive formula is exact enough to compare.
        let p = MediumParams {
            omega_e: 5.0e4,
            omega_q: 1.0e3,
            omega_c: 4.8e4,
            mass: HBAR,
            k_c: 3.0,
            ..sodium()
        };
        let k: f64 = 7.0;
        let naive = p.omega_q + (k - p.k_c).powi(2) / 2.0 + p.omega_c - p.omega_e - k * k / 2.0;
        assert_relative_eq!(control_mismatch(&p, k), naive, max_relative = 1e-14);
        assert!((control_mismatch(&p, k) - control_mismatch(&p, -k)).abs() > 1.0);
    }

    #[test]
    fn polarizability_zero_at_resonance() {
        let p = sodium();
        assert_eq!(polarizability(&p, &Detunings::new(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(polarizability(&p, &Detunings::new(0.0, 3.3e5)).unwrap(), 0.0);
    }

    #[test]
    fn polarizability_at_half_root_two() {
        let p = sodium();
        let d = Detunings::new(p.rabi / 2f64.sqrt(), 0.0);
        let expected = 2f64.sqrt() * p.dipole * p.dipole / (HBAR * p.rabi);
        assert_relative_eq!(polarizability(&p, &d).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn polarizability_pole_reports_locations() {
        let p = sodium();
        for dw in [p.rabi, -p.rabi] {
            match polarizability(&p, &Detunings::new(dw, 0.0)) {
                Err(Error::Pole(Pole::Resonance { lower, upper })) => {
                    assert_relative_eq!(lower, -p.rabi, max_relative = 1e-15);
                    assert_relative_eq!(upper, p.rabi, max_relative = 1e-15);
                }
                other => panic!("expected pole, got {other:?}"),
            }
        }
    }

    #[test]
    fn pole_pair_satisfies_vieta() {
        let p = sodium();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let beta = rng.gen_range(-1e3..1e3) * p.rabi * rng.gen::<f64>().powi(6);
            let (lo, hi) = resonance_poles(p.rabi, beta);
            assert!(lo < 0.0 && 0.0 < hi);
            assert_relative_eq!(lo * hi, -p.rabi * p.rabi, max_relative = 1e-12);
            let sum = lo + hi;
            assert!((sum + beta).abs() <= 1e-12 * (beta.abs().max(p.rabi)), "β = {beta}, sum = {sum}");
        }
    }

    #[test]
    fn index_vacuum_and_zero() {
        let p = sodium();
        assert_eq!(refractive_index_squared(&p, 0.0).unwrap(), 1.0);
        let alpha = -3.0 * EPS0 / (2.0 * p.density);
        assert!(refractive_index_squared(&p, alpha).unwrap().abs() < 1e-15);
    }

    #[test]
    fn index_large_alpha_limit() {
        let p = sodium();
        for s in [1e6, -1e6] {
            let alpha = s * EPS0 / p.density;
            assert_relative_eq!(refractive_index_squared(&p, alpha).unwrap(), -2.0, max_relative = 1e-5);
        }
    }

    #[test]
    fn index_local_field_pole() {
        let p = sodium();
        let alpha = EPS0 / ((1.0 - p.local_field) * p.density);
        assert!(matches!(refractive_index_squared(&p, alpha), Err(Error::Pole(Pole::LocalField { .. }))));
    }

    #[test]
    fn index_is_increasing_in_alpha() {
        let p = sodium();
        let pole = EPS0 / ((1.0 - p.local_field) * p.density);
        let mut prev: Option<f64> = None;
        for i in 0..2000 {
            let alpha = -5.0 * pole + i as f64 * (0.999 * 6.0 * pole) / 2000.0;
            if (alpha - pole).abs() < 1e-6 * pole {
                prev = None;
                continue;
            }
            let d = refractive_index_squared_derivative(&p, alpha).unwrap();
            assert!(d > 0.0);
            let n2 = refractive_index_squared(&p, alpha).unwrap();
            if alpha < pole {
                if let Some(prev) = prev {
                    assert!(n2 > prev);
                }
                prev = Some(n2);
            }
        }
    }

    #[test]
    fn index_derivative_matches_difference_quotient() {
        let p = sodium();
        let scale = EPS0 / p.density;
        for s in [-1.2, -0.3, 0.0, 0.4, 2.1] {
            let alpha = s * scale;
            let h = 1e-6 * scale;
            let fd = (refractive_index_squared(&p, alpha + h).unwrap() - refractive_index_squared(&p, alpha - h).unwrap())
                / (2.0 * h);
            assert_relative_eq!(refractive_index_squared_derivative(&p, alpha).unwrap(), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn polarizability_is_odd_without_mismatch() {
        let p = sodium();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let dw = rng.gen_range(-5.0..5.0) * p.rabi;
            if (dw.abs() - p.rabi).abs() < 1e-3 * p.rabi {
                continue;
            }
            let a = polarizability(&p, &Detunings::new(dw, 0.0)).unwrap();
            let b = polarizability(&p, &Detunings::new(-dw, 0.0)).unwrap();
            assert_eq!(a, -b);
        }
    }

    #[test]
    fn derivative_at_center() {
        let p = sodium();
        let d = polarizability_derivative(&p, &Detunings::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(d, p.dipole * p.dipole / (HBAR * p.rabi * p.rabi), max_relative = 1e-14);
    }

    #[test]
    fn derivative_positive_without_mismatch() {
        let p = sodium();
        for i in -400..=400 {
            let dw = i as f64 * 0.01 * p.rabi + 0.0037 * p.rabi;
            if let Ok(d) = polarizability_derivative(&p, &Detunings::new(dw, 0.0)) {
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn validation_rejects_bad_local_field() {
        let p = MediumParams { local_field: 1.5, ..sodium() };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "x", .. })));
        assert!(sodium().validate().is_ok());
        let p = MediumParams { omega_q: 4e15, ..sodium() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn validity_warning_threshold() {
        let p = sodium();
        assert!(Detunings::new(p.rabi, 0.0).within_validity(&p, DETUNING_WARN_RATIO));
        assert!(!Detunings::new(1e-2 * p.omega_c, 0.0).within_validity(&p, DETUNING_WARN_RATIO));
    }
}
