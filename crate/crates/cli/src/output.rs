//! CSV files with a versioned header.
//!
//! Each file starts with a `# schema=1` line followed by the column header.
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` and keeps output byte-identical between runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use slowpol_core::protocol::WavePacket;
use slowpol_core::{BranchSolution, FwmReport, PolaritonComposition};

use crate::error::CliError;

pub const SCHEMA_LINE: &str = "# schema=1";

pub const DISPERSION_COLUMNS: &[&str] = &["branch", "k", "omega", "delta_omega", "n", "v_g", "v_full"];
pub const COMPOSITION_COLUMNS: &[&str] =
    &["branch", "k", "delta_omega", "u", "photon_plus", "photon_minus", "excited", "gamma", "normalization_residual"];
pub const TRACE_COLUMNS: &[&str] = &["stage", "t", "k", "re_alpha", "im_alpha", "weight"];
pub const ENVELOPE_COLUMNS: &[&str] = &["t", "z", "re_E", "im_E", "abs_E"];
pub const FWM_COLUMNS: &[&str] =
    &["scenario", "k", "k_prime", "shift", "exact_shift", "delta_omega", "delta_omega_prime", "v_g_prime", "gamma_prime"];

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV file being written; rows are buffered and flushed by [`Table::finish`].
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    rows: usize,
}

impl Table {
    pub fn create(path: &Path, columns: &[&str]) -> Result<Self, CliError> {
        let io = |source| CliError::Io { path: path.to_path_buf(), source };
        let mut file = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(file, "{SCHEMA_LINE}").map_err(io)?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(columns).map_err(|source| CliError::Csv { path: path.to_path_buf(), source })?;
        Ok(Self { path: path.to_path_buf(), writer, rows: 0 })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.rows += 1;
        self.writer.write_record(fields).map_err(|source| CliError::Csv { path: self.path.clone(), source })
    }

    /// Flushes the file and returns its path and data row count.
    pub fn finish(mut self) -> Result<(PathBuf, usize), CliError> {
        self.writer.flush().map_err(|source| CliError::Io { path: self.path.clone(), source })?;
        Ok((self.path, self.rows))
    }
}

pub fn dispersion_row(sol: &BranchSolution) -> Vec<String> {
    let mut row = vec![sol.branch.index().to_string()];
    row.extend([sol.k, sol.omega, sol.delta_omega, sol.n, sol.v_g, sol.v_full].map(float));
    row
}

pub fn composition_row(sol: &BranchSolution, c: &PolaritonComposition, residual: f64) -> Vec<String> {
    let mut row = vec![sol.branch.index().to_string()];
    row.extend([sol.k, sol.delta_omega, c.u, c.photon_plus, c.photon_minus, c.excited, c.gamma, residual].map(float));
    row
}

pub fn trace_rows(packet: &WavePacket) -> impl Iterator<Item = Vec<String>> + '_ {
    packet.grid.iter().zip(&packet.amps).map(move |(k, a)| {
        vec![
            packet.stage.name().to_string(),
            float(packet.time),
            float(*k),
            float(a.re),
            float(a.im),
            float(a.norm_sqr()),
        ]
    })
}

pub fn fwm_row(r: &FwmReport) -> Vec<String> {
    let mut row = vec![r.scenario.name().to_string()];
    row.extend(
        [
            r.k,
            r.k_prime,
            r.shift,
            r.exact_shift,
            r.original.delta_omega,
            r.regenerated.delta_omega,
            r.regenerated.v_g,
            r.gamma,
        ]
        .map(float),
    );
    row
}
