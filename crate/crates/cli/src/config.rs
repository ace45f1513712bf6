//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Medium keys either all
//! come from the file or start from a named `preset` and are overridden one
//! by one. Without a preset, `rho`, `mu`, `omega_e`, `omega_q`, `Omega_c` and
//! `M` are required; the rest default to a control beam resonant with q → e
//! and co-propagating with the probe, `x = 2/3`, and the radiative rate
//! implied by the dipole.
//!
//! Every wavevector that enters phase matching (`k_c`, `new_k_c`, `k`) is
//! rounded to the lattice spacing of [`slowpol_core::protocol::K_QUANTUM`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use slowpol_core::constants::{C, EPS0, HBAR};
use slowpol_core::medium::DEFAULT_LOCAL_FIELD;
use slowpol_core::presets;
use slowpol_core::protocol::snap_wavevector;
use slowpol_core::MediumParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Dispersion,
    Composition,
    Protocol,
    Fwm,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Composition => "composition",
            Command::Protocol => "protocol",
            Command::Fwm => "fwm",
        }
    }
}

impl FromStr for Command {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "dispersion" => Ok(Command::Dispersion),
            "composition" => Ok(Command::Composition),
            "protocol" => Ok(Command::Protocol),
            "fwm" => Ok(Command::Fwm),
            _ => Err(()),
        }
    }
}

/// How the probe carrier is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Carrier {
    /// Two-photon detuning of the carrier on the slow branch (rad/s).
    Detuning(f64),
    /// Carrier wavevector (rad/m).
    Wavevector(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub medium: MediumParams,
    /// Wavevector interval of a sweep (rad/m); centered on the resonant
    /// wavevector when absent.
    pub k_range: Option<(f64, f64)>,
    pub samples: Option<usize>,
    pub bandwidth_ratio: f64,
    pub carrier: Carrier,
    pub t1: f64,
    pub t2: f64,
    pub t_final: f64,
    pub new_rabi: f64,
    pub new_k_c: f64,
    pub envelope_times: Option<Vec<f64>>,
    pub envelope_z_range: Option<(f64, f64)>,
    pub envelope_points: usize,
    pub output_path: Option<PathBuf>,
}

pub const DEFAULT_ENVELOPE_POINTS: usize = 401;

/// Accepted keys with the unit quoted in diagnostics.
const KEYS: &[(&str, &str)] = &[
    ("command", "dispersion | composition | protocol | fwm"),
    ("preset", "preset name"),
    ("rho", "m^-3"),
    ("mu", "C·m"),
    ("omega_e", "rad/s"),
    ("omega_q", "rad/s"),
    ("omega_c", "rad/s"),
    ("Omega_c", "rad/s"),
    ("k_c", "rad/m"),
    ("M", "kg"),
    ("Gamma0", "s^-1"),
    ("x", "dimensionless"),
    ("k_range", "rad/m, as `lo, hi`"),
    ("samples", "count"),
    ("bandwidth_ratio", "fraction of Omega_c"),
    ("carrier_detuning", "rad/s"),
    ("k", "rad/m"),
    ("t1", "s"),
    ("t2", "s"),
    ("t_final", "s"),
    ("new_Omega_c", "rad/s"),
    ("new_k_c", "rad/m, or `same` / `reverse`"),
    ("envelope_times", "s, comma separated"),
    ("envelope_z_range", "m, as `lo, hi`"),
    ("envelope_points", "count"),
    ("output_path", "directory"),
];

fn unit(key: &str) -> &'static str {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, u)| *u).unwrap_or("")
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries(HashMap<String, Entry>);

impl Entries {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map: HashMap<String, Entry> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::Parse { line, message: format!("expected `key = value`, found `{content}`") })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.iter().any(|(k, _)| *k == key) {
                return Err(CliError::Parse { line, message: format!("unknown key `{key}`") });
            }
            if value.is_empty() {
                return Err(CliError::Parse { line, message: format!("missing value for `{key}` ({})", unit(key)) });
            }
            if let Some(first) = map.get(key) {
                return Err(CliError::Parse {
                    line,
                    message: format!("duplicate key `{key}` (lines {} and {line})", first.line),
                });
            }
            map.insert(key.to_string(), Entry { line, value: value.to_string() });
        }
        Ok(Entries(map))
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.0.get(key)
    }

    fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        let v: f64 = e.value.parse().map_err(|_| CliError::Parse {
            line: e.line,
            message: format!("`{key}` must be a number ({}), found `{}`", unit(key), e.value),
        })?;
        if !v.is_finite() {
            return Err(CliError::Validation(format!("`{key}` must be finite ({})", unit(key))));
        }
        Ok(Some(v))
    }

    fn count(&self, key: &str) -> Result<Option<usize>, CliError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        e.value.parse().map(Some).map_err(|_| CliError::Parse {
            line: e.line,
            message: format!("`{key}` must be a non-negative integer, found `{}`", e.value),
        })
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        let values = e
            .value
            .split(',')
            .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| CliError::Parse {
                line: e.line,
                message: format!("`{key}` must be a comma-separated list of numbers ({}), found `{}`", unit(key), e.value),
            })?;
        Ok(Some(values))
    }

    fn range(&self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        let Some(values) = self.list(key)? else { return Ok(None) };
        match values[..] {
            [lo, hi] if lo < hi => Ok(Some((lo, hi))),
            _ => Err(CliError::Validation(format!("`{key}` must be two increasing numbers `lo, hi` ({})", unit(key)))),
        }
    }
}

fn required(entries: &Entries, key: &str, what: &str) -> Result<f64, CliError> {
    entries
        .number(key)?
        .ok_or_else(|| CliError::Validation(format!("missing required key `{key}` ({what}, {})", unit(key))))
}

fn medium(entries: &Entries) -> Result<MediumParams, CliError> {
    let mut p = match entries.raw("preset") {
        Some(e) => presets::by_name(&e.value)
            .ok_or_else(|| CliError::Parse { line: e.line, message: format!("unknown preset `{}`", e.value) })?,
        None => {
            let density = required(entries, "rho", "number density")?;
            let dipole = required(entries, "mu", "transition dipole")?;
            let omega_e = required(entries, "omega_e", "excited-state frequency")?;
            let omega_q = required(entries, "omega_q", "hyperfine frequency")?;
            let rabi = required(entries, "Omega_c", "control Rabi frequency")?;
            let mass = required(entries, "M", "atomic mass")?;
            let omega_c = omega_e - omega_q;
            MediumParams {
                density,
                dipole,
                omega_e,
                omega_q,
                omega_c,
                rabi,
                k_c: omega_c / C,
                mass,
                gamma0: omega_e.powi(3) * dipole * dipole / (3.0 * PI * EPS0 * HBAR * C.powi(3)),
                local_field: DEFAULT_LOCAL_FIELD,
            }
        }
    };
    let overrides: [(&str, &mut f64); 10] = [
        ("rho", &mut p.density),
        ("mu", &mut p.dipole),
        ("omega_e", &mut p.omega_e),
        ("omega_q", &mut p.omega_q),
        ("omega_c", &mut p.omega_c),
        ("Omega_c", &mut p.rabi),
        ("k_c", &mut p.k_c),
        ("M", &mut p.mass),
        ("Gamma0", &mut p.gamma0),
        ("x", &mut p.local_field),
    ];
    for (key, slot) in overrides {
        if let Some(v) = entries.number(key)? {
            *slot = v;
        }
    }
    p.k_c = snap_wavevector(p.k_c);
    p.validate().map_err(|e| match e {
        slowpol_core::Error::InvalidParameter { name, reason } => CliError::Validation(format!("`{name}`: {reason}")),
        other => CliError::Validation(other.to_string()),
    })?;
    Ok(p)
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let entries = Entries::parse(text)?;
    let command = match entries.raw("command") {
        Some(e) => Some(e.value.parse::<Command>().map_err(|_| CliError::Parse {
            line: e.line,
            message: format!("unknown command `{}` ({})", e.value, unit("command")),
        })?),
        None => None,
    };
    let medium = medium(&entries)?;

    let carrier = match (entries.number("carrier_detuning")?, entries.number("k")?) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation("give either `carrier_detuning` or `k`, not both".into()));
        }
        (_, Some(k)) => Carrier::Wavevector(snap_wavevector(k)),
        (dw, None) => Carrier::Detuning(dw.unwrap_or(0.0)),
    };

    let t1 = entries.number("t1")?.unwrap_or(0.0);
    let t2 = entries.number("t2")?.unwrap_or(t1);
    let t_final = entries.number("t_final")?.unwrap_or(t2);
    if !(t1 >= 0.0) {
        return Err(CliError::Validation("`t1` must be >= 0 (s)".into()));
    }
    if !(t2 >= t1) {
        return Err(CliError::Validation("`t2` must be >= t1 (s)".into()));
    }
    if !(t_final >= t2) {
        return Err(CliError::Validation("`t_final` must be >= t2 (s)".into()));
    }

    let new_rabi = entries.number("new_Omega_c")?.unwrap_or(medium.rabi);
    if !(new_rabi > 0.0) {
        return Err(CliError::Validation("`new_Omega_c` must be > 0 (rad/s)".into()));
    }
    let new_k_c = match entries.raw("new_k_c").map(|e| e.value.as_str()) {
        None | Some("same") => medium.k_c,
        Some("reverse") => -medium.k_c,
        Some(_) => snap_wavevector(entries.number("new_k_c")?.unwrap_or(medium.k_c)),
    };

    let bandwidth_ratio = entries.number("bandwidth_ratio")?.unwrap_or(slowpol_core::presets::PROBE_BAND_RATIO);
    if !(bandwidth_ratio >= 0.0) {
        return Err(CliError::Validation("`bandwidth_ratio` must be >= 0 (fraction of Omega_c)".into()));
    }
    let samples = entries.count("samples")?;
    if samples == Some(0) {
        return Err(CliError::Validation("`samples` must be >= 1".into()));
    }
    let envelope_points = entries.count("envelope_points")?.unwrap_or(DEFAULT_ENVELOPE_POINTS);
    if envelope_points < 3 {
        return Err(CliError::Validation("`envelope_points` must be >= 3".into()));
    }
    let envelope_times = entries.list("envelope_times")?;
    if let Some(times) = &envelope_times {
        if times.iter().any(|&t| t < 0.0 || (t > t1 && t < t2)) {
            return Err(CliError::Validation(
                "`envelope_times` must be >= 0 and outside the storage interval (t1, t2) (s)".into(),
            ));
        }
    }

    Ok(RunConfig {
        command,
        medium,
        k_range: entries.range("k_range")?,
        samples,
        bandwidth_ratio,
        carrier,
        t1,
        t2,
        t_final,
        new_rabi,
        new_k_c,
        envelope_times,
        envelope_z_range: entries.range("envelope_z_range")?,
        envelope_points,
        output_path: entries.raw("output_path").map(|e| PathBuf::from(&e.value)),
    })
}
