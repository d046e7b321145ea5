//! Flat key-value run configuration. Keys carry their unit as a suffix
//! (`_GHz`, `_MHz`, `_kHz`, `_ns`); omitted keys take the reference device
//! values and the standard stage settings.

use std::str::FromStr;

use lambda_core::protocols::{grid, CaptureConfig, ResetConfig, DEFAULT_WIDTH, RESET_N_MAX};
use lambda_core::pulses::SignalShape;
use lambda_core::quantum::Qubit;
use lambda_core::system::{find_impedance_match, SystemParams};
use lambda_core::units::{ghz, khz, mhz, to_ghz};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Command};

/// Fock cutoff for capture runs unless `n_max` is given.
pub const CAPTURE_N_MAX: usize = 2;

#[allow(non_snake_case)]
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub omega_q_GHz: Option<f64>,
    pub omega_r_GHz: Option<f64>,
    pub chi_MHz: Option<f64>,
    pub kappa_MHz: Option<f64>,
    pub kappa_prime_MHz: Option<f64>,
    pub gamma_MHz: Option<f64>,
    pub gamma_prime_kHz: Option<f64>,
    pub omega_d_GHz: Option<f64>,
    pub dt_ns: Option<f64>,
    pub n_max: Option<usize>,

    pub shape: Option<String>,
    pub length_ns: Option<f64>,
    pub beta: Option<f64>,
    pub width_ns: Option<f64>,
    pub drive_MHz: Option<f64>,
    pub signal_GHz: Option<f64>,
    pub photons: Option<usize>,
    pub reset_GHz: Option<f64>,
    pub n_mean: Option<f64>,
    pub initial: Option<String>,
    pub stage: Option<String>,

    pub drive_min_MHz: Option<f64>,
    pub drive_max_MHz: Option<f64>,
    pub drive_step_MHz: Option<f64>,
    pub signal_min_GHz: Option<f64>,
    pub signal_max_GHz: Option<f64>,
    pub signal_step_MHz: Option<f64>,
    pub reset_min_GHz: Option<f64>,
    pub reset_max_GHz: Option<f64>,
    pub reset_step_MHz: Option<f64>,
    pub length_min_ns: Option<f64>,
    pub length_max_ns: Option<f64>,
    pub length_step_ns: Option<f64>,
    pub gammas_MHz: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Capture,
    Reset,
}

/// Inclusive grid in rad/ns (or ns for lengths).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        grid(self.start, self.stop, self.step).expect("validated grid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `n_max` here is the explicit value or the capture default.
    pub params: SystemParams,
    pub n_max: Option<usize>,
    pub shape: SignalShape,
    pub length: f64,
    pub beta: Option<f64>,
    pub width: f64,
    pub drive: Option<f64>,
    pub signal: f64,
    pub photons: usize,
    pub reset: f64,
    pub n_mean: f64,
    pub initial: Qubit,
    pub stage: Stage,
    /// Ω_d/2π bounds and step in MHz; unset entries follow the command.
    pub drive_grid: [Option<f64>; 3],
    pub signal_grid: GridSpec,
    pub reset_grid: GridSpec,
    pub length_grid: GridSpec,
    pub gammas: Vec<f64>,
    /// SHA-256 of the canonical form of the document, hex.
    pub hash: String,
}

fn config_error(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn non_negative(key: &str, v: f64) -> Result<f64, CliError> {
    if !v.is_finite() || v < 0.0 {
        return Err(config_error(key, format!("must be a non-negative number, got {v}")));
    }
    Ok(v)
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if !v.is_finite() || v <= 0.0 {
        return Err(config_error(key, format!("must be positive, got {v}")));
    }
    Ok(v)
}

/// `raw` is in the units named by the keys; `units` converts each entry.
fn grid_spec(keys: [&str; 3], raw: [f64; 3], units: [fn(f64) -> f64; 3]) -> Result<GridSpec, CliError> {
    let start = non_negative(keys[0], raw[0])?;
    let stop = non_negative(keys[1], raw[1])?;
    let step = positive(keys[2], raw[2])?;
    if stop < start {
        return Err(config_error(keys[1], format!("{stop} is below {} = {start}", keys[0])));
    }
    Ok(GridSpec { start: units[0](start), stop: units[1](stop), step: units[2](step) })
}

fn ns(x: f64) -> f64 {
    x
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.message().trim().to_string()))?;
    resolve(&file)
}

pub fn resolve(file: &ConfigFile) -> Result<RunConfig, CliError> {
    let table = SystemParams::reference_device();
    let mut p = table;
    if let Some(v) = file.omega_q_GHz {
        p.omega_q = ghz(positive("omega_q_GHz", v)?);
    }
    if let Some(v) = file.omega_r_GHz {
        p.omega_r = ghz(positive("omega_r_GHz", v)?);
    }
    if let Some(v) = file.chi_MHz {
        p.chi = mhz(positive("chi_MHz", v)?);
    }
    if let Some(v) = file.kappa_MHz {
        p.kappa = mhz(non_negative("kappa_MHz", v)?);
    }
    if let Some(v) = file.kappa_prime_MHz {
        p.kappa_prime = mhz(non_negative("kappa_prime_MHz", v)?);
    }
    if let Some(v) = file.gamma_MHz {
        p = p.with_gamma(mhz(non_negative("gamma_MHz", v)?));
    }
    if let Some(v) = file.gamma_prime_kHz {
        p.gamma_prime = khz(non_negative("gamma_prime_kHz", v)?);
    }
    p.omega_d = match file.omega_d_GHz {
        Some(v) => ghz(positive("omega_d_GHz", v)?),
        None => p.omega_q - (table.omega_q - table.omega_d),
    };
    if let Some(v) = file.dt_ns {
        p.dt = positive("dt_ns", v)?;
    }
    if p.kappa_prime > p.kappa {
        return Err(config_error("kappa_prime_MHz", "radiative rate exceeds the total rate kappa_MHz"));
    }
    if p.gamma_prime > p.gamma {
        return Err(config_error("gamma_prime_kHz", "radiative rate exceeds the total rate gamma_MHz"));
    }
    if !p.is_nested() {
        return Err(config_error(
            "omega_d_GHz",
            format!(
                "{:.6} GHz lies outside the window ({:.6}, {:.6}) GHz between omega_q - 2 chi and omega_q",
                to_ghz(p.omega_d),
                to_ghz(p.omega_q - 2.0 * p.chi),
                to_ghz(p.omega_q)
            ),
        ));
    }
    if let Some(n) = file.n_max {
        if n < 1 {
            return Err(config_error("n_max", "must be at least 1"));
        }
    }
    p.n_max = file.n_max.unwrap_or(CAPTURE_N_MAX);

    let shape = match &file.shape {
        Some(s) => SignalShape::from_str(s).map_err(|e| config_error("shape", e))?,
        None => SignalShape::Gaussian,
    };
    let photons = file.photons.unwrap_or(1);
    if photons > 2 {
        return Err(config_error("photons", format!("at most two signal photons are supported, got {photons}")));
    }
    let initial = match file.initial.as_deref() {
        None | Some("excited") => Qubit::Excited,
        Some("ground") => Qubit::Ground,
        Some(other) => return Err(config_error("initial", format!("expected 'excited' or 'ground', got '{other}'"))),
    };
    let stage = match file.stage.as_deref() {
        None | Some("capture") => Stage::Capture,
        Some("reset") => Stage::Reset,
        Some(other) => return Err(config_error("stage", format!("expected 'capture' or 'reset', got '{other}'"))),
    };
    let gammas = match &file.gammas_MHz {
        Some(g) if g.is_empty() => return Err(config_error("gammas_MHz", "needs at least one value")),
        Some(g) => g.iter().map(|&v| non_negative("gammas_MHz", v).map(mhz)).collect::<Result<_, _>>()?,
        None => vec![0.0, mhz(0.02), mhz(0.1)],
    };
    let drive_grid = [file.drive_min_MHz, file.drive_max_MHz, file.drive_step_MHz];
    drive_grid_for(&drive_grid, Command::Rates)?;

    let signal_grid = grid_spec(
        ["signal_min_GHz", "signal_max_GHz", "signal_step_MHz"],
        [
            file.signal_min_GHz.unwrap_or(9.97),
            file.signal_max_GHz.unwrap_or(10.03),
            file.signal_step_MHz.unwrap_or(0.5),
        ],
        [ghz, ghz, mhz],
    )?;
    let reset_grid = grid_spec(
        ["reset_min_GHz", "reset_max_GHz", "reset_step_MHz"],
        [
            file.reset_min_GHz.unwrap_or(9.80),
            file.reset_max_GHz.unwrap_or(9.92),
            file.reset_step_MHz.unwrap_or(2.0),
        ],
        [ghz, ghz, mhz],
    )?;
    let length_grid = grid_spec(
        ["length_min_ns", "length_max_ns", "length_step_ns"],
        [
            file.length_min_ns.unwrap_or(20.0),
            file.length_max_ns.unwrap_or(300.0),
            file.length_step_ns.unwrap_or(20.0),
        ],
        [ns, ns, ns],
    )?;
    if length_grid.start <= 0.0 {
        return Err(config_error("length_min_ns", "must be positive"));
    }

    let config = RunConfig {
        params: p,
        n_max: file.n_max,
        shape,
        length: positive("length_ns", file.length_ns.unwrap_or(100.0))?,
        beta: file.beta.map(|b| positive("beta", b)).transpose()?,
        width: positive("width_ns", file.width_ns.unwrap_or(DEFAULT_WIDTH))?,
        drive: file.drive_MHz.map(|v| non_negative("drive_MHz", v)).transpose()?.map(mhz),
        signal: ghz(positive("signal_GHz", file.signal_GHz.unwrap_or(10.007))?),
        photons,
        reset: ghz(positive("reset_GHz", file.reset_GHz.unwrap_or(9.860))?),
        n_mean: non_negative("n_mean", file.n_mean.unwrap_or(10.0))?,
        initial,
        stage,
        drive_grid,
        signal_grid,
        reset_grid,
        length_grid,
        gammas,
        hash: canonical_hash(file),
    };
    Ok(config)
}

fn drive_grid_for(raw: &[Option<f64>; 3], command: Command) -> Result<GridSpec, CliError> {
    let defaults = match command {
        Command::SweepReset => [0.0, 60.0, 2.0],
        _ => [0.0, 30.0, 0.5],
    };
    let v = [0, 1, 2].map(|i| raw[i].unwrap_or(defaults[i]));
    grid_spec(["drive_min_MHz", "drive_max_MHz", "drive_step_MHz"], v, [mhz, mhz, mhz])
}

/// Hash of the re-serialized document, so comments, whitespace and key order
/// do not matter.
pub fn canonical_hash(file: &ConfigFile) -> String {
    let canonical = toml::to_string(file).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn capture_params(&self) -> SystemParams {
        self.params.with_n_max(self.n_max.unwrap_or(CAPTURE_N_MAX))
    }

    pub fn reset_params(&self) -> SystemParams {
        self.params.with_n_max(self.n_max.unwrap_or(RESET_N_MAX))
    }

    /// Fock cutoff and step a command runs with.
    pub fn numerics(&self, command: Command) -> (f64, usize) {
        let p = match command {
            Command::Reset | Command::SweepReset => self.reset_params(),
            Command::Audit if self.stage == Stage::Reset => self.reset_params(),
            _ => self.capture_params(),
        };
        (p.dt, p.n_max)
    }

    pub fn capture(&self) -> Result<CaptureConfig, CliError> {
        let mut c = CaptureConfig::new(self.capture_params())?.with_shape(self.shape);
        if let Some(b) = self.beta {
            c.beta = b;
        }
        c.length = self.length;
        c.width = self.width;
        if let Some(d) = self.drive {
            c.omega_drive = d;
        }
        c.omega_s = self.signal;
        c.photons = self.photons;
        Ok(c)
    }

    pub fn reset(&self) -> ResetConfig {
        let mut c = ResetConfig::new(self.reset_params());
        if let Some(d) = self.drive {
            c.omega_drive = d;
        }
        c.omega_reset = self.reset;
        c.n_mean = self.n_mean;
        c.initial = self.initial;
        c.width = self.width;
        c
    }

    /// Drive-amplitude grid; reset maps default to a wider, coarser range.
    pub fn drives(&self, command: Command) -> Result<Vec<f64>, CliError> {
        Ok(drive_grid_for(&self.drive_grid, command)?.values())
    }

    pub fn impedance_match(&self) -> Result<f64, CliError> {
        Ok(find_impedance_match(&self.params)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference_device() {
        let c = parse_config("").unwrap();
        assert_eq!(c.params, SystemParams::reference_device());
        assert_eq!(c.capture_params().n_max, 2);
        assert_eq!(c.reset_params().n_max, 4);
        assert_eq!(c.shape, SignalShape::Gaussian);
        assert_eq!(c.length, 100.0);
        assert_eq!(c.initial, Qubit::Excited);
    }

    #[test]
    fn drive_outside_window_names_the_key() {
        let err = parse_config("omega_d_GHz = 5.1").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CliError::Config(_)));
        assert!(msg.contains("omega_d_GHz"), "{msg}");
        assert!(msg.contains("4.92"), "{msg}");
    }

    #[test]
    fn radiative_rate_above_total_is_rejected() {
        let err = parse_config("kappa_prime_MHz = 30\nkappa_MHz = 20").unwrap_err();
        assert!(err.to_string().contains("kappa_prime_MHz"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse_config("kapa_MHz = 20").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("kapa_MHz"));
    }

    #[test]
    fn negative_rates_are_errors() {
        assert!(parse_config("gamma_MHz = -0.1").unwrap_err().to_string().contains("gamma_MHz"));
        assert!(parse_config("dt_ns = 0").is_err());
        assert!(parse_config("photons = 3").is_err());
        assert!(parse_config("signal_min_GHz = 10.1").is_err());
        assert!(parse_config("shape = \"triangle\"").is_err());
    }

    #[test]
    fn lower_gamma_pulls_radiative_rate_down() {
        let c = parse_config("gamma_MHz = 0").unwrap();
        assert_eq!(c.params.gamma, 0.0);
        assert_eq!(c.params.gamma_prime, 0.0);
        assert!(parse_config("gamma_MHz = 0\ngamma_prime_kHz = 0.1").is_err());
    }

    #[test]
    fn hash_ignores_layout() {
        let a = parse_config("length_ns = 200\nshape = \"square\"").unwrap();
        let b = parse_config("# comment\nshape = \"square\"\n\nlength_ns = 200.0\n").unwrap();
        let c = parse_config("length_ns = 210").unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
        assert_eq!(a.hash.len(), 64);
    }

    #[test]
    fn stage_overrides() {
        let c = parse_config("shape = \"exponential\"\nbeta = 2.5\ndrive_MHz = 12\nn_max = 3").unwrap();
        let cap = c.capture().unwrap();
        assert_eq!(cap.beta, 2.5);
        assert_eq!(cap.params.n_max, 3);
        assert!((cap.omega_drive - mhz(12.0)).abs() < 1e-15);
        let r = c.reset();
        assert_eq!(r.params.n_max, 3);
        assert_eq!(r.omega_drive, mhz(12.0));
        let d = parse_config("").unwrap();
        assert_eq!(d.drives(Command::Rates).unwrap().len(), 61);
        assert_eq!(d.drives(Command::SweepReset).unwrap().len(), 31);
    }
}
