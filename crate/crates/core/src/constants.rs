//! CODATA 2018 constants in SI units.

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;

/// The three constants that enter every optical formula in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub eps0: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants { hbar: HBAR, eps0: EPS0, c: C };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}
