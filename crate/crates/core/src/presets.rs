//! Named parameter sets.

use core::f64::consts::PI;

use crate::constants::C;
use crate::medium::{MediumParams, DEFAULT_LOCAL_FIELD};
use crate::protocol::snap_wavevector;

/// Sodium D-line wavelength (m).
pub const SODIUM_WAVELENGTH: f64 = 589.0e-9;
/// Ground hyperfine splitting of sodium-23 (Hz).
pub const SODIUM_HYPERFINE_HZ: f64 = 1.77e9;
/// Radiative decay rate of the sodium D line (s⁻¹).
pub const SODIUM_GAMMA0: f64 = 6.15e7;
/// Mass of a sodium-23 atom (kg).
pub const SODIUM_MASS: f64 = 3.8175e-26;

/// Density scale that brings the `hau2001` slow-branch group velocity at
/// resonance from ~10⁻⁷c up to 10⁻¹c.
pub const REDUCED_DENSITY_SCALE: f64 = 8.96e-7;
/// Time the probe spends in the medium before storage (s).
pub const PROPAGATION_TIME: f64 = 11.8e-6;
/// Half-width of the probe band relative to the Rabi frequency.
pub const PROBE_BAND_RATIO: f64 = 0.02;

/// Sodium condensate and control beam tuned for a stopped-light experiment.
///
/// - dipole from `Γ₀ = ω³μ²/(3πε₀ħc³)` at 589 nm, rounded to 2.11×10⁻²⁹ C·m
/// - density 1.1×10¹⁹ m⁻³ (11×10¹² cm⁻³, peak density of the cold cloud)
/// - Rabi frequency 2π×4.6 MHz, which gives `v_g/c ≈ 0.996×10⁻⁷` at resonance
/// - control resonant with q → e and co-propagating with the probe
pub fn hau2001() -> MediumParams {
    let omega_e = 2.0 * PI * C / SODIUM_WAVELENGTH;
    let omega_q = 2.0 * PI * SODIUM_HYPERFINE_HZ;
    let omega_c = omega_e - omega_q;
    MediumParams {
        density: 1.1e19,
        dipole: 2.11e-29,
        omega_e,
        omega_q,
        omega_c,
        rabi: 2.0 * PI * 4.6e6,
        k_c: snap_wavevector(omega_c / C),
        mass: SODIUM_MASS,
        gamma0: SODIUM_GAMMA0,
        local_field: DEFAULT_LOCAL_FIELD,
    }
}

/// `hau2001` at reduced density, `v_g/c ≈ 10⁻¹`.
pub fn hau2001_reduced_density() -> MediumParams {
    let p = hau2001();
    p.with_density(p.density * REDUCED_DENSITY_SCALE)
}

/// Looks a preset up by the name used in configuration files.
pub fn by_name(name: &str) -> Option<MediumParams> {
    match name {
        "hau2001" => Some(hau2001()),
        "hau2001_reduced_density" => Some(hau2001_reduced_density()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{EPS0, HBAR};

    #[test]
    fn presets_validate() {
        hau2001().validate().unwrap();
        hau2001_reduced_density().validate().unwrap();
        assert!(by_name("hau2001").is_some());
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn dipole_matches_decay_rate() {
        let p = hau2001();
        let mu2 = 3.0 * PI * EPS0 * HBAR * C.powi(3) * p.gamma0 / p.omega_e.powi(3);
        assert!((mu2.sqrt() / p.dipole - 1.0).abs() < 1e-3);
    }
}
