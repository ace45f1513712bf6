//! Storage, retrieval and redirection of a probe pulse.
//!
//! A pulse inside the medium is a coherent state of slow polaritons with one
//! complex amplitude per plane-wave mode. The protocol is a sequence of
//! per-mode maps:
//!
//! 1. polariton stage: `α_k → α_k e^{−iω_k t} e^{−Γ_k t/2}`
//! 2. control off: `α_k → i u_k α_k` on the spin wave `q = k − k_c`; the
//!    radiative and excited-state admixtures are logged and dropped
//! 3. storage: `α_q → α_q e^{−iω_{q,q} t}`, lossless
//! 4. control on with `(Ω_c′, k_c′)`: `α_q → −i u′_{k′} α_q` at
//!    `k′ = q + k_c′`; weight outside the new slow branch is logged
//! 5. polariton stage again with the new control beam
//!
//! Phases are tracked in a frame rotating at `ω_c + ω_q`, which is the same
//! before and after the switch because the control frequency never changes.
//! Only moduli are compared physically; the phase of each map is the product
//! of its explicit factors.
//!
//! Wavevectors are kept on a lattice of spacing [`K_QUANTUM`], which makes
//! `k − k_c = k′ − k_c′` hold exactly in floating point.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// Resolves inherently whenever std is linked into the build.
#[allow(unused_imports)]
use num_traits::Float;

use crate::dispersion::{branch_windows, frequency_of_wavevector, solve_with_windows, Branch, BranchSolution, DEFAULT_SCAN_RESOLUTION};
use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::polariton::{composition, PolaritonComposition};

/// Wavevector lattice spacing (rad/m). A power of two, so sums and
/// differences of lattice points below 2⁴⁴ rad/m are exact.
pub const K_QUANTUM: f64 = 1.0 / 256.0;

/// Half-width of a Gaussian packet's grid in units of its rms k-spread.
pub const BAND_SIGMAS: f64 = 4.0;

/// Storage shorter than this many excited-state lifetimes leaves the
/// dropped admixture not yet radiated.
pub const DISSIPATION_LIFETIMES: f64 = 5.0;

/// Rounds a wavevector to the nearest lattice point.
pub fn snap_wavevector(k: f64) -> f64 {
    (k / K_QUANTUM).round() * K_QUANTUM
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Polariton,
    Magnon,
    Regenerated,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Polariton => "polariton",
            Stage::Magnon => "magnon",
            Stage::Regenerated => "regenerated",
        }
    }
}

/// Coherent amplitudes on a uniform wavevector grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    /// Mode wavevectors (rad/m): photon wavevector for polariton stages,
    /// spin-wave wavevector `k − k_c` for the magnon stage.
    pub grid: Vec<f64>,
    pub amps: Vec<Complex64>,
    pub branch: Branch,
    pub stage: Stage,
    pub carrier_k: f64,
    /// Time at which `amps` apply (s).
    pub time: f64,
    /// Phase rate of each mode in the `ω_c + ω_q` frame (rad/s).
    pub rates: Vec<f64>,
    /// Population decay rate of each mode (s⁻¹).
    pub decay: Vec<f64>,
}

impl WavePacket {
    /// A packet with no dynamics attached yet; rates are filled in by the
    /// stage functions.
    pub fn new(grid: Vec<f64>, amps: Vec<Complex64>, stage: Stage, carrier_k: f64) -> Result<Self> {
        if grid.is_empty() || grid.len() != amps.len() {
            return Err(Error::InvalidParameter { name: "grid", reason: "grid and amplitudes must be non-empty and of equal length" });
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter { name: "grid", reason: "wavevectors must be strictly increasing" });
        }
        if grid.len() > 2 {
            let dk = grid[1] - grid[0];
            if grid.windows(2).any(|w| ((w[1] - w[0]) - dk).abs() > 1e-9 * dk) {
                return Err(Error::InvalidParameter { name: "grid", reason: "wavevector spacing must be uniform" });
            }
        }
        let n = grid.len();
        Ok(Self { grid, amps, branch: Branch::Slow, stage, carrier_k, time: 0.0, rates: vec![0.0; n], decay: vec![0.0; n] })
    }

    /// Total quasiparticle number `Σ|α_k|²`.
    pub fn number(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.grid[1] - self.grid[0]
        }
    }

    /// RMS width of `|α_k|²` about its mean (rad/m).
    pub fn k_spread(&self) -> f64 {
        let n = self.number();
        let mean: f64 = self.grid.iter().zip(&self.amps).map(|(k, a)| k * a.norm_sqr()).sum::<f64>() / n;
        let var: f64 = self.grid.iter().zip(&self.amps).map(|(k, a)| (k - mean).powi(2) * a.norm_sqr()).sum::<f64>() / n;
        var.sqrt()
    }

    fn expect(&self, allowed: &[Stage], expected: &'static str) -> Result<()> {
        if allowed.contains(&self.stage) {
            Ok(())
        } else {
            Err(Error::WrongStage { expected, found: self.stage.name() })
        }
    }
}

/// Slow-branch solution and composition of every occupied mode, with the
/// frame rate and decay stored on the packet.
fn attach_polariton_dynamics(packet: &mut WavePacket, params: &MediumParams) -> Result<Vec<Option<(BranchSolution, PolaritonComposition)>>> {
    let mut modes = Vec::with_capacity(packet.len());
    for i in 0..packet.len() {
        if packet.amps[i] == Complex64::new(0.0, 0.0) {
            packet.rates[i] = 0.0;
            packet.decay[i] = 0.0;
            modes.push(None);
            continue;
        }
        let sol = frequency_of_wavevector(params, packet.grid[i], Branch::Slow)?;
        let comp = composition(params, &sol)?;
        packet.rates[i] = sol.frame_frequency(params);
        packet.decay[i] = comp.gamma;
        modes.push(Some((sol, comp)));
    }
    Ok(modes)
}

/// Normalized Gaussian packet on the slow branch.
///
/// `bandwidth_ratio` is the rms spread of the excited band in units of Ω_c;
/// it becomes a k-spread `bandwidth_ratio·Ω_c/v_g` through the carrier's
/// group velocity. The grid spans ±[`BAND_SIGMAS`] spreads. A zero
/// bandwidth gives a single mode.
pub fn gaussian_packet(params: &MediumParams, carrier_k: f64, bandwidth_ratio: f64, samples: usize) -> Result<WavePacket> {
    params.validate()?;
    if !(bandwidth_ratio >= 0.0) || !bandwidth_ratio.is_finite() {
        return Err(Error::InvalidParameter { name: "bandwidth_ratio", reason: "must be finite and >= 0" });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter { name: "samples", reason: "must be >= 1" });
    }
    let carrier = snap_wavevector(carrier_k);
    let windows = branch_windows(params, carrier, DEFAULT_SCAN_RESOLUTION)?;
    let center = solve_with_windows(params, carrier, Branch::Slow, &windows)?;

    let mut packet = if bandwidth_ratio == 0.0 || samples == 1 {
        WavePacket::new(vec![carrier], vec![Complex64::new(1.0, 0.0)], Stage::Polariton, carrier)?
    } else {
        let spread_dw = bandwidth_ratio * params.rabi;
        let window = windows.get(Branch::Slow).ok_or(Error::MissingWindow { branch: Branch::Slow })?;
        let (lower, upper) = (center.delta_omega - BAND_SIGMAS * spread_dw, center.delta_omega + BAND_SIGMAS * spread_dw);
        if !(window.contains(lower) && window.contains(upper)) {
            return Err(Error::BandTooWide { lower, upper, window_lower: window.lower, window_upper: window.upper });
        }
        let sigma_k = spread_dw / center.v_g;
        let quantum = 2.0 * K_QUANTUM;
        let dk = ((2.0 * BAND_SIGMAS * sigma_k / (samples - 1) as f64) / quantum).round().max(1.0) * quantum;
        let mid = (samples - 1) as f64 / 2.0;
        let grid: Vec<f64> = (0..samples).map(|i| carrier + (i as f64 - mid) * dk).collect();
        let weights: Vec<f64> = grid.iter().map(|k| (-(k - carrier).powi(2) / (4.0 * sigma_k * sigma_k)).exp()).collect();
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let amps = weights.iter().map(|w| Complex64::new(w / norm, 0.0)).collect();
        WavePacket::new(grid, amps, Stage::Polariton, carrier)?
    };
    attach_polariton_dynamics(&mut packet, params)?;
    Ok(packet)
}

fn check_duration(dt: f64) -> Result<()> {
    if dt >= 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "dt", reason: "durations must be finite and >= 0 (s)" })
    }
}

/// Free evolution on the slow branch for `dt` seconds, with frequency
/// dependent decay `Γ_k`.
pub fn evolve_polariton_stage(packet: &WavePacket, params: &MediumParams, dt: f64) -> Result<WavePacket> {
    packet.expect(&[Stage::Polariton, Stage::Regenerated], "polariton")?;
    check_duration(dt)?;
    let mut out = packet.clone();
    attach_polariton_dynamics(&mut out, params)?;
    if dt > 0.0 {
        for i in 0..out.len() {
            out.amps[i] *= Complex64::from_polar((-0.5 * out.decay[i] * dt).exp(), -out.rates[i] * dt);
        }
        out.time += dt;
    }
    Ok(out)
}

/// Weight removed from the packet when the control beam is switched off.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwitchOffLeakage {
    /// Photon content `Σ|α|² n v_g/c`.
    pub radiative: f64,
    /// Excited-state content `Σ|α|² u²(Δω/Ω_c)²`.
    pub excited: f64,
}

#[derive(Debug, Clone)]
pub struct SwitchOff {
    pub packet: WavePacket,
    pub leakage: SwitchOffLeakage,
    /// Spin amplitude `u_k` of each mode at the switch.
    pub u: Vec<f64>,
}

/// Sudden switch-off: each polariton collapses onto its spin wave.
pub fn switch_off_map(packet: &WavePacket, params: &MediumParams) -> Result<SwitchOff> {
    packet.expect(&[Stage::Polariton, Stage::Regenerated], "polariton")?;
    let mut polariton = packet.clone();
    let modes = attach_polariton_dynamics(&mut polariton, params)?;
    let mut leakage = SwitchOffLeakage::default();
    let mut u = vec![0.0; packet.len()];
    let mut amps = Vec::with_capacity(packet.len());
    for (i, mode) in modes.iter().enumerate() {
        let a = packet.amps[i];
        match mode {
            Some((_, comp)) => {
                let w = a.norm_sqr();
                leakage.radiative += w * comp.radiative_weight();
                leakage.excited += w * comp.excited_weight();
                u[i] = comp.u;
                amps.push(Complex64::new(0.0, comp.u) * a);
            }
            None => amps.push(Complex64::new(0.0, 0.0)),
        }
    }
    let grid: Vec<f64> = packet.grid.iter().map(|k| k - params.k_c).collect();
    let rates = grid.iter().map(|&q| params.recoil(q)).collect();
    let magnon = WavePacket {
        decay: vec![0.0; grid.len()],
        rates,
        grid,
        amps,
        branch: packet.branch,
        stage: Stage::Magnon,
        carrier_k: packet.carrier_k - params.k_c,
        time: packet.time,
    };
    Ok(SwitchOff { packet: magnon, leakage, u })
}

/// Free spin-wave evolution, `α_q → α_q e^{−iω_{q,q}dt}` in the frame of the
/// absent control beam. Unitary.
pub fn evolve_magnon_stage(packet: &WavePacket, params: &MediumParams, dt: f64) -> Result<WavePacket> {
    packet.expect(&[Stage::Magnon], "magnon")?;
    check_duration(dt)?;
    let mut out = packet.clone();
    for i in 0..out.len() {
        out.rates[i] = params.recoil(out.grid[i]);
        out.decay[i] = 0.0;
    }
    if dt > 0.0 {
        for i in 0..out.len() {
            out.amps[i] *= Complex64::from_polar(1.0, -out.rates[i] * dt);
        }
        out.time += dt;
    }
    Ok(out)
}

/// When the control beam is switched back on, and with what.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSchedule {
    /// Switch-off time (s).
    pub t1: f64,
    /// Switch-on time (s).
    pub t2: f64,
    /// Rabi frequency of the new control beam (rad/s).
    pub new_rabi: f64,
    /// Wavevector of the new control beam (rad/m).
    pub new_k_c: f64,
}

impl ProtocolSchedule {
    pub fn new(t1: f64, t2: f64, new_rabi: f64, new_k_c: f64) -> Result<Self> {
        let s = Self { t1, t2, new_rabi, new_k_c };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 >= 0.0 && self.t1.is_finite()) {
            return Err(Error::InvalidParameter { name: "t1", reason: "switch-off time must be finite and >= 0 (s)" });
        }
        if !(self.t2 >= self.t1 && self.t2.is_finite()) {
            return Err(Error::InvalidParameter { name: "t2", reason: "switch-on time must be finite and >= t1 (s)" });
        }
        if !(self.new_rabi > 0.0 && self.new_rabi.is_finite()) {
            return Err(Error::InvalidParameter { name: "new_Omega_c", reason: "Rabi frequency must be finite and > 0 (rad/s)" });
        }
        if !self.new_k_c.is_finite() {
            return Err(Error::InvalidParameter { name: "new_k_c", reason: "control wavevector must be finite (rad/m)" });
        }
        Ok(())
    }

    /// Medium dressed by the new control beam.
    pub fn apply(&self, params: &MediumParams) -> MediumParams {
        params.with_control(self.new_rabi, self.new_k_c)
    }

    pub fn storage_time(&self) -> f64 {
        self.t2 - self.t1
    }
}

/// Weight that does not come back as a slow polariton at switch-on.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SwitchOnLeakage {
    /// `Σ|α|²(1 − u′²)`, the part projected onto branches 1 and 3.
    pub other_branches: f64,
    /// Weight of modes with no slow-branch solution at `k′`.
    pub out_of_window: f64,
    /// Diagnostic projections `Σ|α|² u_m²` onto the lower and upper branches.
    pub lower_projection: f64,
    pub upper_projection: f64,
}

#[derive(Debug, Clone)]
pub struct SwitchOn {
    pub packet: WavePacket,
    pub leakage: SwitchOnLeakage,
    /// Spin amplitude `u′_{k′}` of each regenerated mode (0 when out of window).
    pub u: Vec<f64>,
}

/// Sudden switch-on of the control beam `(Ω_c′, k_c′)`: each spin wave `q`
/// is re-dressed into the slow polariton at `k′ = q + k_c′`.
pub fn switch_on_map(packet: &WavePacket, params: &MediumParams, sched: &ProtocolSchedule) -> Result<SwitchOn> {
    packet.expect(&[Stage::Magnon], "magnon")?;
    sched.validate()?;
    let dressed = sched.apply(params);
    let mut leakage = SwitchOnLeakage::default();
    let n = packet.len();
    let mut u = vec![0.0; n];
    let mut amps = vec![Complex64::new(0.0, 0.0); n];
    let mut rates = vec![0.0; n];
    let mut decay = vec![0.0; n];
    let grid: Vec<f64> = packet.grid.iter().map(|q| q + sched.new_k_c).collect();
    for i in 0..n {
        let b = packet.amps[i];
        let w = b.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let k = grid[i];
        let slow = branch_windows(&dressed, k, DEFAULT_SCAN_RESOLUTION)
            .and_then(|win| Ok((solve_with_windows(&dressed, k, Branch::Slow, &win)?, win)))
            .and_then(|(sol, win)| Ok((sol, composition(&dressed, &sol)?, win)));
        match slow {
            Ok((sol, comp, windows)) => {
                u[i] = comp.u;
                amps[i] = Complex64::new(0.0, -comp.u) * b;
                rates[i] = sol.frame_frequency(&dressed);
                decay[i] = comp.gamma;
                leakage.other_branches += w * (1.0 - comp.u * comp.u);
                for (branch, slot) in [(Branch::Lower, &mut leakage.lower_projection), (Branch::Upper, &mut leakage.upper_projection)] {
                    if let Ok(c) = solve_with_windows(&dressed, k, branch, &windows).and_then(|s| composition(&dressed, &s)) {
                        *slot += w * c.u * c.u;
                    }
                }
            }
            Err(_) => leakage.out_of_window += w,
        }
    }
    let regenerated = WavePacket {
        grid,
        amps,
        branch: Branch::Slow,
        stage: Stage::Regenerated,
        carrier_k: packet.carrier_k + sched.new_k_c,
        time: packet.time,
        rates,
        decay,
    };
    Ok(SwitchOn { packet: regenerated, leakage, u })
}

/// Geometry of the time-delayed four-wave mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `k_c′ = k_c`: the pulse comes back where it was going.
    Degenerate,
    /// Probe co-propagating with the control, control reversed: the pulse
    /// comes back travelling backwards.
    Reverted,
    /// Probe counter-propagating with the control, control reversed:
    /// `k′ ≈ 3k`, near the upper edge of the slow branch.
    CounterPropagating,
    General,
}

impl Scenario {
    pub fn classify(k: f64, k_c: f64, new_k_c: f64) -> Self {
        let tol = 1e-12 * k_c.abs().max(new_k_c.abs());
        if (new_k_c - k_c).abs() <= tol {
            Scenario::Degenerate
        } else if (new_k_c + k_c).abs() <= tol {
            if k * k_c > 0.0 {
                Scenario::Reverted
            } else {
                Scenario::CounterPropagating
            }
        } else {
            Scenario::General
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Degenerate => "degenerate",
            Scenario::Reverted => "reverted",
            Scenario::CounterPropagating => "counter_propagating",
            Scenario::General => "general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwmReport {
    pub scenario: Scenario,
    /// Original probe wavevector (rad/m).
    pub k: f64,
    /// Phase-matched regenerated wavevector `k − k_c + k_c′` (rad/m).
    pub k_prime: f64,
    /// Frequency shift δω′ (rad/s): `2v_g′(k_c − k)` for the reverted
    /// geometry, the exact shift otherwise.
    pub shift: f64,
    /// `ω′^(2)_{k′} − ω^(2)_k` from the two dispersion solutions (rad/s).
    pub exact_shift: f64,
    pub original: BranchSolution,
    pub regenerated: BranchSolution,
    /// Decay rate of the regenerated polariton (s⁻¹).
    pub gamma: f64,
}

/// Phase matching, frequency shift and lifetime of the regenerated mode.
pub fn fwm_analyze(params: &MediumParams, k: f64, sched: &ProtocolSchedule) -> Result<FwmReport> {
    sched.validate()?;
    let original = frequency_of_wavevector(params, k, Branch::Slow)?;
    let dressed = sched.apply(params);
    let k_prime = (k - params.k_c) + sched.new_k_c;
    let regenerated = frequency_of_wavevector(&dressed, k_prime, Branch::Slow)?;
    let gamma = composition(&dressed, &regenerated)?.gamma;
    let exact_shift = regenerated.frame_frequency(&dressed) - original.frame_frequency(params);
    let scenario = Scenario::classify(k, params.k_c, sched.new_k_c);
    let shift = match scenario {
        Scenario::Reverted => 2.0 * regenerated.v_g * (params.k_c - k),
        _ => exact_shift,
    };
    Ok(FwmReport { scenario, k, k_prime, shift, exact_shift, original, regenerated, gamma })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolWarning {
    /// The storage time is shorter than [`DISSIPATION_LIFETIMES`]/Γ₀, so the
    /// dropped admixture has not fully radiated yet.
    LeakageNotDissipated { storage_time: f64, required: f64 },
}

/// Outcome of a full store-and-retrieve run with its conservation ledger.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub final_packet: WavePacket,
    /// `(u_k u′_{k′})²` per grid point.
    pub per_mode_efficiency: Vec<f64>,
    /// `Σ|α_final|² / Σ|α_initial|²`.
    pub total_efficiency: f64,
    pub initial_number: f64,
    pub leakage_radiative: f64,
    pub leakage_excited: f64,
    pub leakage_other_branches: f64,
    pub leakage_out_of_window: f64,
    /// Population lost to polariton decay before and after storage.
    pub decay_loss_before: f64,
    pub decay_loss_after: f64,
    pub lower_projection: f64,
    pub upper_projection: f64,
    /// δω′ of the carrier (rad/s).
    pub regenerated_shift: f64,
    pub scenario: Scenario,
    pub fwm: FwmReport,
    /// Packets at t₀, t₁⁻, t₁⁺, t₂⁻, t₂⁺ and t_final.
    pub trace: Vec<WavePacket>,
    pub warnings: Vec<ProtocolWarning>,
}

impl ProtocolResult {
    pub fn total_leakage(&self) -> f64 {
        self.leakage_radiative + self.leakage_excited + self.leakage_other_branches + self.leakage_out_of_window
    }

    pub fn decay_loss(&self) -> f64 {
        self.decay_loss_before + self.decay_loss_after
    }

    /// `(final + leakage + decay − initial) / initial`; zero when every
    /// quasiparticle is accounted for.
    pub fn ledger_residual(&self) -> f64 {
        (self.final_packet.number() + self.total_leakage() + self.decay_loss() - self.initial_number) / self.initial_number
    }
}

/// Population lost by a polariton packet decaying for `dt`.
fn decay_loss(packet: &WavePacket, dt: f64) -> f64 {
    packet.amps.iter().zip(&packet.decay).map(|(a, g)| -a.norm_sqr() * (-g * dt).exp_m1()).sum()
}

/// Runs the complete protocol from `initial.time` to `t_final`.
pub fn run_protocol(initial: &WavePacket, params: &MediumParams, sched: &ProtocolSchedule, t_final: f64) -> Result<ProtocolResult> {
    initial.expect(&[Stage::Polariton], "polariton")?;
    sched.validate()?;
    if !(sched.t1 >= initial.time) {
        return Err(Error::InvalidParameter { name: "t1", reason: "switch-off must not precede the packet time (s)" });
    }
    if !(t_final >= sched.t2) {
        return Err(Error::InvalidParameter { name: "t_final", reason: "final time must be >= t2 (s)" });
    }
    let dressed = sched.apply(params);
    let initial_number = initial.number();
    let mut trace = Vec::with_capacity(6);
    let mut warnings = Vec::new();
    let required = if params.gamma0 > 0.0 { DISSIPATION_LIFETIMES / params.gamma0 } else { 0.0 };
    if sched.storage_time() <= required {
        warnings.push(ProtocolWarning::LeakageNotDissipated { storage_time: sched.storage_time(), required });
    }

    let start = evolve_polariton_stage(initial, params, 0.0)?;
    let dt1 = sched.t1 - initial.time;
    let decay_loss_before = decay_loss(&start, dt1);
    trace.push(start.clone());
    let before_off = evolve_polariton_stage(&start, params, dt1)?;
    trace.push(before_off.clone());

    let off = switch_off_map(&before_off, params)?;
    trace.push(off.packet.clone());
    let stored = evolve_magnon_stage(&off.packet, params, sched.storage_time())?;
    trace.push(stored.clone());

    let on = switch_on_map(&stored, params, sched)?;
    trace.push(on.packet.clone());
    let dt2 = t_final - sched.t2;
    let decay_loss_after = decay_loss(&on.packet, dt2);
    let final_packet = evolve_polariton_stage(&on.packet, &dressed, dt2)?;
    trace.push(final_packet.clone());

    let fwm = fwm_analyze(params, initial.carrier_k, sched)?;
    let per_mode_efficiency = off.u.iter().zip(&on.u).map(|(a, b)| (a * b) * (a * b)).collect();
    Ok(ProtocolResult {
        total_efficiency: final_packet.number() / initial_number,
        final_packet,
        per_mode_efficiency,
        initial_number,
        leakage_radiative: off.leakage.radiative,
        leakage_excited: off.leakage.excited,
        leakage_other_branches: on.leakage.other_branches,
        leakage_out_of_window: on.leakage.out_of_window,
        decay_loss_before,
        decay_loss_after,
        lower_projection: on.leakage.lower_projection,
        upper_projection: on.leakage.upper_projection,
        regenerated_shift: fwm.shift,
        scenario: fwm.scenario,
        fwm,
        trace,
        warnings,
    })
}

/// `E(z, t) = Σ_k α_{k,t} e^{ikz}` of a polariton packet, propagating the
/// amplitudes from `packet.time` to `t` with the packet's own dynamics.
pub fn real_space_envelope(packet: &WavePacket, positions: &[f64], t: f64) -> Result<Vec<Complex64>> {
    packet.expect(&[Stage::Polariton, Stage::Regenerated], "polariton")?;
    let dt = t - packet.time;
    let amps: Vec<Complex64> = (0..packet.len())
        .map(|i| packet.amps[i] * Complex64::from_polar((-0.5 * packet.decay[i] * dt).exp(), -packet.rates[i] * dt))
        .collect();
    let carrier = packet.carrier_k;
    Ok(positions
        .iter()
        .map(|&z| {
            let sum: Complex64 = packet.grid.iter().zip(&amps).map(|(k, a)| a * Complex64::from_polar(1.0, (k - carrier) * z)).sum();
            sum * Complex64::from_polar(1.0, carrier * z)
        })
        .collect())
}

/// Position of the envelope maximum on `[z_lo, z_hi]`, refined by a
/// parabola through `ln|E|` at the best sample and its neighbours.
pub fn peak_position(packet: &WavePacket, z_lo: f64, z_hi: f64, points: usize, t: f64) -> Result<f64> {
    let points = points.max(3);
    let h = (z_hi - z_lo) / (points - 1) as f64;
    let zs: Vec<f64> = (0..points).map(|i| z_lo + i as f64 * h).collect();
    let env = real_space_envelope(packet, &zs, t)?;
    let mags: Vec<f64> = env.iter().map(|e| e.norm()).collect();
    let (best, _) = mags
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    if best == 0 || best + 1 == points {
        return Ok(zs[best]);
    }
    let (a, b, c) = (mags[best - 1].ln(), mags[best].ln(), mags[best + 1].ln());
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return Ok(zs[best]);
    }
    Ok(zs[best] + 0.5 * h * (a - c) / curvature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::C;
    use crate::dispersion::resonant_wavevector;
    use crate::presets::{self, PROBE_BAND_RATIO, PROPAGATION_TIME, SODIUM_HYPERFINE_HZ};
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn setup() -> (MediumParams, f64) {
        let p = presets::hau2001();
        let k0 = snap_wavevector(resonant_wavevector(&p, p.k_c).unwrap());
        (p, k0)
    }

    #[test]
    fn lattice_arithmetic_is_exact() {
        let a = snap_wavevector(1.0668123456e7);
        let b = snap_wavevector(-1.0667987654e7);
        let q = a - b;
        assert_eq!((q + b) - b, q);
        assert_eq!(a.rem_euclid(K_QUANTUM), 0.0);
    }

    #[test]
    fn zero_bandwidth_is_single_mode() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 64).unwrap();
        assert_eq!(packet.len(), 1);
        assert_eq!(packet.number(), 1.0);
    }

    #[test]
    fn gaussian_spread_follows_group_velocity() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, PROBE_BAND_RATIO, 257).unwrap();
        let sol = frequency_of_wavevector(&p, k0, Branch::Slow).unwrap();
        assert_relative_eq!(packet.number(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(packet.k_spread(), PROBE_BAND_RATIO * p.rabi / sol.v_g, max_relative = 1e-2);
        assert!(packet.grid.iter().all(|k| k.rem_euclid(K_QUANTUM) == 0.0));
    }

    #[test]
    fn band_wider_than_window_is_rejected() {
        let (p, k0) = setup();
        assert!(matches!(gaussian_packet(&p, k0, 0.5, 65), Err(Error::BandTooWide { .. })));
    }

    #[test]
    fn polariton_stage_identity_and_phase() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 1).unwrap();
        let same = evolve_polariton_stage(&packet, &p, 0.0).unwrap();
        assert_eq!(same.amps, packet.amps);
        let later = evolve_polariton_stage(&packet, &p, 1e-5).unwrap();
        assert_relative_eq!(later.amps[0].norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn band_edge_mode_decays_by_a_quarter() {
        let (p, _) = setup();
        let edge = crate::dispersion::solve_at_detuning(&p, PROBE_BAND_RATIO * p.rabi, p.k_c).unwrap();
        let packet = gaussian_packet(&p, edge.k, 0.0, 1).unwrap();
        let later = evolve_polariton_stage(&packet, &p, PROPAGATION_TIME).unwrap();
        let loss = 1.0 - later.number();
        assert!((0.2..0.3).contains(&loss), "loss {loss}");
    }

    #[test]
    fn switch_off_bookkeeping() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 1).unwrap();
        let off = switch_off_map(&packet, &p).unwrap();
        let sol = frequency_of_wavevector(&p, k0, Branch::Slow).unwrap();
        let radiative = sol.n * sol.v_g / C;
        assert_relative_eq!(off.packet.number(), 1.0 - radiative, max_relative = 1e-14);
        assert_relative_eq!(off.leakage.radiative, radiative, max_relative = 1e-9);
        assert!((off.packet.number() + off.leakage.radiative + off.leakage.excited - 1.0).abs() < 1e-12);
        assert_eq!(off.packet.stage, Stage::Magnon);
        assert_eq!(off.packet.grid[0], k0 - p.k_c);
    }

    #[test]
    fn magnon_stage_is_unitary() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, PROBE_BAND_RATIO, 33).unwrap();
        let off = switch_off_map(&packet, &p).unwrap();
        let same = evolve_magnon_stage(&off.packet, &p, 0.0).unwrap();
        assert_eq!(same.amps, off.packet.amps);
        let later = evolve_magnon_stage(&off.packet, &p, 1e-3).unwrap();
        assert!((later.number() - off.packet.number()).abs() < 1e-14);
    }

    #[test]
    fn magnon_relative_phase() {
        let (p, _) = setup();
        let q = [1.0e6, 2.0e6];
        let amps = vec![Complex64::new(1.0, 0.0); 2];
        let packet = WavePacket { stage: Stage::Magnon, ..WavePacket::new(q.to_vec(), amps, Stage::Magnon, 1.5e6).unwrap() };
        let dt = 1e-6;
        let out = evolve_magnon_stage(&packet, &p, dt).unwrap();
        let rel = (out.amps[0] * out.amps[1].conj()).arg();
        let expected = (p.recoil(q[1]) - p.recoil(q[0])) * dt;
        assert_relative_eq!(rel, expected, max_relative = 1e-9);
    }

    #[test]
    fn stage_preconditions() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 1).unwrap();
        assert!(matches!(evolve_magnon_stage(&packet, &p, 1.0), Err(Error::WrongStage { .. })));
        let off = switch_off_map(&packet, &p).unwrap();
        assert!(evolve_polariton_stage(&off.packet, &p, 1.0).is_err());
        assert!(real_space_envelope(&off.packet, &[0.0], 0.0).is_err());
        assert!(evolve_polariton_stage(&packet, &p, -1.0).is_err());
    }

    #[test]
    fn degenerate_switch_on_returns_same_wavevector() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 1).unwrap();
        let off = switch_off_map(&packet, &p).unwrap();
        let sched = ProtocolSchedule::new(0.0, 0.0, p.rabi, p.k_c).unwrap();
        let on = switch_on_map(&off.packet, &p, &sched).unwrap();
        assert_eq!(on.packet.grid[0], k0);
        assert_relative_eq!(on.u[0], off.u[0], max_relative = 1e-15);
        let eff = (on.u[0] * off.u[0]).powi(2);
        assert!(eff >= 1.0 - 3e-7);
        assert_relative_eq!(on.packet.amps[0].re, off.u[0] * on.u[0], max_relative = 1e-15);
    }

    #[test]
    fn reverted_wavevector() {
        let (p, k0) = setup();
        let sched = ProtocolSchedule::new(0.0, 0.0, p.rabi, -p.k_c).unwrap();
        let r = fwm_analyze(&p, k0, &sched).unwrap();
        assert_eq!(r.scenario, Scenario::Reverted);
        assert_eq!(r.k_prime, -k0 - 2.0 * (p.k_c - k0));
        assert!(r.k_prime < 0.0);
    }

    #[test]
    fn degenerate_fwm_has_no_shift() {
        let (p, k0) = setup();
        let sched = ProtocolSchedule::new(0.0, 0.0, p.rabi, p.k_c).unwrap();
        let r = fwm_analyze(&p, k0, &sched).unwrap();
        assert_eq!(r.scenario, Scenario::Degenerate);
        assert_eq!(r.k_prime, k0);
        assert_eq!(r.shift, 0.0);
    }

    #[test]
    fn reverted_shift_is_sub_kilohertz() {
        let (p, k0) = setup();
        let sched = ProtocolSchedule::new(0.0, 0.0, p.rabi, -p.k_c).unwrap();
        let r = fwm_analyze(&p, k0, &sched).unwrap();
        // k − k_c is set by the hyperfine splitting
        assert_relative_eq!(k0 - p.k_c, 2.0 * PI * SODIUM_HYPERFINE_HZ / C, max_relative = 1e-3);
        let khz = r.shift.abs() / (2.0 * PI * 1e3);
        assert!((0.1..0.5).contains(&khz), "shift {khz} kHz");
        assert_relative_eq!(r.shift, r.exact_shift, max_relative = 1e-2);
        assert!(r.shift.abs() < 1e-3 * p.rabi);
    }

    #[test]
    fn counter_propagating_lands_near_upper_edge() {
        let p = presets::hau2001();
        let p = p.with_control(p.rabi, -p.k_c);
        let k0 = snap_wavevector(resonant_wavevector(&p, p.omega_e / C).unwrap());
        let sched = ProtocolSchedule::new(0.0, 0.0, p.rabi, -p.k_c).unwrap();
        let r = fwm_analyze(&p, k0, &sched).unwrap();
        assert_eq!(r.scenario, Scenario::CounterPropagating);
        assert_eq!(r.k_prime, k0 + 2.0 * sched.new_k_c);
        assert_relative_eq!(r.k_prime / k0, 3.0, max_relative = 1e-5);
        let windows = branch_windows(&sched.apply(&p), r.k_prime, 2000).unwrap();
        let slow = windows.get(Branch::Slow).unwrap();
        assert!(r.regenerated.delta_omega > 0.5 * slow.upper);
        assert!(r.gamma > 0.1 * p.gamma0 && r.gamma < p.gamma0, "Γ′ = {}", r.gamma);
    }

    #[test]
    fn envelope_of_single_mode_is_flat() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 1).unwrap();
        let env = real_space_envelope(&packet, &[0.0, 1e-4, 3.3e-3], 2e-6).unwrap();
        for e in &env {
            assert_relative_eq!(e.norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn envelope_moves_at_group_velocity() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.005, 129).unwrap();
        let sol = frequency_of_wavevector(&p, k0, Branch::Slow).unwrap();
        let t = 2e-6;
        let span = 8.0 / packet.k_spread() + sol.v_full * t;
        let z0 = peak_position(&packet, -span, span, 4001, 0.0).unwrap();
        let z1 = peak_position(&packet, -span, span, 4001, t).unwrap();
        assert!(z0.abs() < 1e-3 * span);
        assert_relative_eq!((z1 - z0) / t, sol.v_full, max_relative = 1e-2);
    }

    #[test]
    fn schedule_validation() {
        assert!(ProtocolSchedule::new(1.0, 0.5, 1.0, 0.0).is_err());
        assert!(ProtocolSchedule::new(-1.0, 0.5, 1.0, 0.0).is_err());
        assert!(ProtocolSchedule::new(0.0, 0.5, 0.0, 0.0).is_err());
        assert!(ProtocolSchedule::new(0.0, 0.5, 1.0, 0.0).is_ok());
    }

    #[test]
    fn short_storage_warns() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 1).unwrap();
        let sched = ProtocolSchedule::new(0.0, 1e-9, p.rabi, p.k_c).unwrap();
        let r = run_protocol(&packet, &p, &sched, 1e-9).unwrap();
        assert_eq!(r.warnings.len(), 1);
        let sched = ProtocolSchedule::new(0.0, 1e-6, p.rabi, p.k_c).unwrap();
        assert!(run_protocol(&packet, &p, &sched, 1e-6).unwrap().warnings.is_empty());
    }

    #[test]
    fn instant_degenerate_round_trip() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, 0.0, 1).unwrap();
        let sched = ProtocolSchedule::new(0.0, 0.0, p.rabi, p.k_c).unwrap();
        let r = run_protocol(&packet, &p, &sched, 0.0).unwrap();
        let sol = frequency_of_wavevector(&p, k0, Branch::Slow).unwrap();
        let u2 = 1.0 - sol.n * sol.v_g / C;
        assert!((r.total_efficiency - u2 * u2).abs() < 1e-10);
        assert!(r.ledger_residual().abs() < 1e-12);
        assert_eq!(r.scenario, Scenario::Degenerate);
        assert_eq!(r.trace.len(), 6);
    }

    #[test]
    fn band_protocol_ledger_closes() {
        let (p, k0) = setup();
        let packet = gaussian_packet(&p, k0, PROBE_BAND_RATIO, 65).unwrap();
        let sched = ProtocolSchedule::new(PROPAGATION_TIME, PROPAGATION_TIME + 1e-4, p.rabi, p.k_c).unwrap();
        let r = run_protocol(&packet, &p, &sched, sched.t2 + 1e-6).unwrap();
        assert!(r.ledger_residual().abs() < 1e-8);
        assert!(r.total_efficiency > 0.0 && r.total_efficiency < 1.0);
        // pre-storage decay dominates the loss
        assert!(r.decay_loss_before > 10.0 * (r.leakage_radiative + r.leakage_excited + r.leakage_other_branches));
    }
}
