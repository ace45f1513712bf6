//! Slow-light polaritons in an EIT medium.
//!
//! The crate evaluates the optical response of a three-level Λ gas dressed by
//! a control laser, solves the three polariton branches of the dispersion
//! relation `ω n(ω, k) = c|k|`, decomposes each mode into photon, spin and
//! excited-state parts, and follows a probe wave packet through sudden
//! switch-off / switch-on of the control beam.
//!
//! Everything here is pure arithmetic on immutable inputs. The crate is
//! `no_std` and only needs `alloc` for packet and sweep buffers; file formats
//! and the command line live in the `slowpol` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constants;
pub mod dispersion;
mod error;
pub mod medium;
pub mod polariton;
pub mod presets;
pub mod protocol;
pub mod roots;

pub use crate::constants::PhysicalConstants;
pub use crate::dispersion::{
    branch_windows, dispersion_sweep, frequency_of_wavevector, full_group_velocity,
    radiative_group_velocity, solve_at_detuning, wavevector_of_frequency, Branch, BranchSolution,
    BranchWindows, Sweep, Window,
};
pub use crate::error::{Error, Pole, Result};
pub use crate::medium::{Detunings, Level, MediumParams};
pub use crate::polariton::{composition, decay_rate, hopfield_u, normalization_residual, PolaritonComposition};
pub use crate::protocol::{
    fwm_analyze, gaussian_packet, run_protocol, FwmReport, ProtocolResult, ProtocolSchedule,
    Scenario, Stage, WavePacket,
};
