use std::fs;
use std::path::{Path, PathBuf};

use slowpol_core::medium::DETUNING_WARN_RATIO;
use slowpol_core::protocol::{real_space_envelope, snap_wavevector, ProtocolWarning, DISSIPATION_LIFETIMES};
use slowpol_core::{
    composition, dispersion_sweep, fwm_analyze, gaussian_packet, normalization_residual, run_protocol, solve_at_detuning,
    Branch, Detunings, MediumParams, ProtocolSchedule, Sweep,
};

use crate::config::{Carrier, Command, RunConfig};
use crate::error::CliError;
use crate::output::{self, float, Table};

pub const DEFAULT_SWEEP_SAMPLES: usize = 201;
pub const DEFAULT_PACKET_SAMPLES: usize = 65;
/// Default sweep half-width in units of `Ω_c/v_g`, the k-extent of the slow branch.
pub const DEFAULT_SWEEP_HALF_WIDTH: f64 = 1.5;

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Written files with their data row counts.
    pub files: Vec<(PathBuf, usize)>,
    /// One-line result for stdout.
    pub summary: String,
    pub warnings: Vec<String>,
}

/// Runs `command` and writes its CSV files into `out_dir`.
pub fn run(config: &RunConfig, command: Command, out_dir: &Path) -> Result<Report, CliError> {
    if let Some(c) = config.command {
        if c != command {
            return Err(CliError::Validation(format!(
                "configuration is for `{}` but `{}` was requested",
                c.name(),
                command.name()
            )));
        }
    }
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    match command {
        Command::Dispersion => dispersion(config, out_dir),
        Command::Composition => composition_report(config, out_dir),
        Command::Protocol => protocol(config, out_dir),
        Command::Fwm => fwm(config, out_dir),
    }
}

fn sweep(config: &RunConfig) -> Result<Sweep, CliError> {
    let p = &config.medium;
    let range = match config.k_range {
        Some(r) => r,
        None => {
            let center = solve_at_detuning(p, 0.0, p.k_c).map_err(CliError::physics("resonant wavevector"))?;
            let half = DEFAULT_SWEEP_HALF_WIDTH * p.rabi / center.v_g;
            (center.k - half, center.k + half)
        }
    };
    let samples = config.samples.unwrap_or(DEFAULT_SWEEP_SAMPLES);
    dispersion_sweep(p, range, samples).map_err(CliError::physics("dispersion sweep"))
}

fn failure_warning(sweep: &Sweep) -> Vec<String> {
    if sweep.failures.is_empty() {
        return Vec::new();
    }
    let per_branch: Vec<String> = Branch::ALL
        .iter()
        .map(|b| format!("{}", sweep.failures.iter().filter(|(fb, _, _)| fb == b).count()))
        .collect();
    vec![format!(
        "{} sweep points had no solution (branches 1/2/3: {})",
        sweep.failures.len(),
        per_branch.join("/")
    )]
}

fn dispersion(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let sweep = sweep(config)?;
    let mut table = Table::create(&out_dir.join("dispersion.csv"), output::DISPERSION_COLUMNS)?;
    for sol in sweep.iter() {
        table.row(output::dispersion_row(sol))?;
    }
    let (path, rows) = table.finish()?;
    Ok(Report {
        summary: format!("dispersion rows={rows} path={}", path.display()),
        files: vec![(path, rows)],
        warnings: failure_warning(&sweep),
    })
}

fn composition_report(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let p = &config.medium;
    let sweep = sweep(config)?;
    let mut warnings = failure_warning(&sweep);
    let mut table = Table::create(&out_dir.join("composition.csv"), output::COMPOSITION_COLUMNS)?;
    let mut worst = 0.0f64;
    let mut skipped = 0;
    for sol in sweep.iter() {
        match composition(p, sol) {
            Ok(c) => {
                let residual = normalization_residual(&c);
                worst = worst.max(residual.abs());
                table.row(output::composition_row(sol, &c, residual))?;
            }
            Err(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} points skipped: n·v_g/c above 1"));
    }
    let (path, rows) = table.finish()?;
    Ok(Report {
        summary: format!("composition rows={rows} max_normalization_residual={} path={}", float(worst), path.display()),
        files: vec![(path, rows)],
        warnings,
    })
}

fn carrier_wavevector(config: &RunConfig, warnings: &mut Vec<String>) -> Result<f64, CliError> {
    let p = &config.medium;
    match config.carrier {
        Carrier::Wavevector(k) => Ok(k),
        Carrier::Detuning(dw) => {
            if !Detunings::new(dw, 0.0).within_validity(p, DETUNING_WARN_RATIO) {
                warnings.push(format!(
                    "carrier detuning {} rad/s exceeds {DETUNING_WARN_RATIO}·omega_c; the two-level response is outside its validity range",
                    float(dw)
                ));
            }
            let sol = solve_at_detuning(p, dw, p.k_c).map_err(CliError::physics("carrier wavevector"))?;
            Ok(snap_wavevector(sol.k))
        }
    }
}

fn schedule(config: &RunConfig) -> Result<ProtocolSchedule, CliError> {
    ProtocolSchedule::new(config.t1, config.t2, config.new_rabi, config.new_k_c).map_err(CliError::physics("schedule"))
}

fn protocol(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let p = &config.medium;
    let mut warnings = Vec::new();
    let k = carrier_wavevector(config, &mut warnings)?;
    let samples = config.samples.unwrap_or(DEFAULT_PACKET_SAMPLES);
    let packet = gaussian_packet(p, k, config.bandwidth_ratio, samples).map_err(CliError::physics("probe packet"))?;
    let sched = schedule(config)?;
    let result = run_protocol(&packet, p, &sched, config.t_final).map_err(CliError::physics("protocol"))?;
    for w in &result.warnings {
        match w {
            ProtocolWarning::LeakageNotDissipated { storage_time, required } => warnings.push(format!(
                "storage time {} s is below {DISSIPATION_LIFETIMES}/Gamma0 = {} s; the discarded admixture has not fully radiated",
                float(*storage_time),
                float(*required)
            )),
        }
    }

    let mut trace = Table::create(&out_dir.join("protocol_trace.csv"), output::TRACE_COLUMNS)?;
    for snapshot in &result.trace {
        for row in output::trace_rows(snapshot) {
            trace.row(row)?;
        }
    }
    let trace = trace.finish()?;
    let envelope = envelope(config, &result, &out_dir.join("envelope.csv"))?;

    let summary = format!(
        "protocol scenario={} efficiency={} leakage_radiative={} leakage_excited={} leakage_other_branches={} \
         leakage_out_of_window={} decay_loss={} ledger_residual={} shift={}",
        result.scenario.name(),
        float(result.total_efficiency),
        float(result.leakage_radiative),
        float(result.leakage_excited),
        float(result.leakage_other_branches),
        float(result.leakage_out_of_window),
        float(result.decay_loss()),
        float(result.ledger_residual()),
        float(result.regenerated_shift),
    );
    Ok(Report { files: vec![trace, envelope], summary, warnings })
}

/// Envelope snapshots: before switch-off from the initial packet, after
/// switch-on from the regenerated one.
fn envelope(config: &RunConfig, result: &slowpol_core::ProtocolResult, path: &Path) -> Result<(PathBuf, usize), CliError> {
    let initial = &result.trace[0];
    let regenerated = &result.final_packet;
    let times = config.envelope_times.clone().unwrap_or_else(|| {
        let mut t = vec![initial.time, config.t1, config.t2, config.t_final];
        t.dedup();
        t
    });
    let (lo, hi) = match config.envelope_z_range {
        Some(r) => r,
        None => {
            let spread = initial.k_spread();
            let width = if spread > 0.0 { 8.0 / spread } else { 1e-3 };
            let before = result.fwm.original.v_full.abs() * (config.t1 - initial.time);
            let after = result.fwm.regenerated.v_full.abs()
                * (times.iter().cloned().fold(config.t2, f64::max) - config.t2);
            let half = width + before.max(after);
            (-half, half)
        }
    };
    let n = config.envelope_points;
    let zs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut table = Table::create(path, output::ENVELOPE_COLUMNS)?;
    for &t in &times {
        let packet = if t >= config.t2 { regenerated } else { initial };
        let field = real_space_envelope(packet, &zs, t).map_err(CliError::physics("envelope"))?;
        for (z, e) in zs.iter().zip(field) {
            table.row([float(t), float(*z), float(e.re), float(e.im), float(e.norm())])?;
        }
    }
    table.finish()
}

fn fwm(config: &RunConfig, out_dir: &Path) -> Result<Report, CliError> {
    let p: &MediumParams = &config.medium;
    let mut warnings = Vec::new();
    let k = carrier_wavevector(config, &mut warnings)?;
    let report = fwm_analyze(p, k, &schedule(config)?).map_err(CliError::physics("four-wave mixing"))?;
    let mut table = Table::create(&out_dir.join("fwm.csv"), output::FWM_COLUMNS)?;
    table.row(output::fwm_row(&report))?;
    let file = table.finish()?;
    let summary = format!(
        "fwm scenario={} k={} k_prime={} shift={} exact_shift={} gamma_prime={}",
        report.scenario.name(),
        float(report.k),
        float(report.k_prime),
        float(report.shift),
        float(report.exact_shift),
        float(report.gamma),
    );
    Ok(Report { files: vec![file], summary, warnings })
}
