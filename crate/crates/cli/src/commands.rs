use std::fs;
use std::path::{Path, PathBuf};

use lambda_core::protocols::{
    near_zero_spots, rate_sweep, reflection_map, run_capture, run_reset, stage_window, sweep_drive_map,
    sweep_pulse_length, sweep_reset_map, StageResult,
};
use lambda_core::quantum::Qubit;
use lambda_core::system::{dressed_spectrum, find_impedance_match, SystemParams};
use lambda_core::units::{to_ghz, to_mhz};
use rayon::prelude::*;

use crate::config::{RunConfig, Stage};
use crate::plot::{Guide, PlotSpec};
use crate::table::{footer_hash, Footer, ResultTable};
use crate::{CliError, Command};

/// |r| below this marks a matched spot on a reflection map.
pub const SPOT_THRESHOLD: f64 = 0.05;
/// Map points with a smaller P_1 get no P_2/P_1 entry.
pub const RATIO_FLOOR: f64 = 1e-9;
pub const DT_THRESHOLD: f64 = 1e-4;
pub const NMAX_THRESHOLD_CAPTURE: f64 = 1e-3;
pub const NMAX_THRESHOLD_RESET: f64 = 5e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub table: ResultTable,
    pub plot: Option<PlotSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommandResult {
    pub outputs: Vec<Output>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

impl CommandResult {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.outputs.iter().map(|o| &o.table).find(|t| t.name == name)
    }
}

fn output(table: ResultTable, plot: Option<PlotSpec>) -> Output {
    let plot = if table.rows.is_empty() { None } else { plot };
    Output { table, plot }
}

fn line(x: &str, ys: &[&str]) -> PlotSpec {
    PlotSpec::Line { x: x.into(), ys: ys.iter().map(|s| s.to_string()).collect(), group: None }
}

pub fn run_command(command: Command, config: &RunConfig) -> Result<CommandResult, CliError> {
    let (dt, n_max) = config.numerics(command);
    let footer = Footer { config_hash: config.hash.clone(), dt, n_max };
    match command {
        Command::Rates => rates(config, footer),
        Command::Match => impedance_match(config, footer),
        Command::Reflection => reflection(config, footer),
        Command::Capture => capture(config, footer),
        Command::SweepLength => sweep_length(config, footer),
        Command::SweepMap => sweep_map(config, footer),
        Command::Reset => reset(config, footer),
        Command::SweepReset => sweep_reset(config, footer),
        Command::Audit => audit(config, footer),
    }
}

fn rates(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let rows = rate_sweep(&config.params, &config.drives(Command::Rates)?)?;
    let mut t = ResultTable::new(
        "rates",
        &[
            "drive_MHz",
            "kappa31_MHz",
            "kappa32_MHz",
            "kappa41_MHz",
            "kappa42_MHz",
            "omega31_GHz",
            "omega32_GHz",
            "omega41_GHz",
        ],
        footer,
    );
    for r in &rows {
        let mut row = vec![to_mhz(r.omega_drive)];
        row.extend(r.rates.iter().map(|&k| to_mhz(k)));
        row.extend([to_ghz(r.omega_31), to_ghz(r.omega_32), to_ghz(r.omega_41)]);
        t.push(row);
    }
    let plot = line("drive_MHz", &["kappa31_MHz", "kappa32_MHz", "kappa41_MHz", "kappa42_MHz"]);
    Ok(CommandResult {
        summary: vec![format!("{} drive amplitudes", rows.len())],
        outputs: vec![output(t, Some(plot))],
    })
}

fn impedance_match(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let p = &config.params;
    let omega = find_impedance_match(p)?;
    let s = dressed_spectrum(p, omega)?;
    let gap = (s.angles[1] - s.angles[0]).abs();
    let mut t = ResultTable::new(
        "match",
        &[
            "drive_MHz",
            "angle_gap_rad",
            "kappa31_MHz",
            "kappa32_MHz",
            "kappa41_MHz",
            "kappa42_MHz",
            "omega31_GHz",
            "omega41_GHz",
        ],
        footer,
    );
    t.push(vec![
        to_mhz(omega),
        gap,
        to_mhz(s.kappa(3, 1)),
        to_mhz(s.kappa(3, 2)),
        to_mhz(s.kappa(4, 1)),
        to_mhz(s.kappa(4, 2)),
        to_ghz(s.omega(3, 1)),
        to_ghz(s.omega(4, 1)),
    ]);
    Ok(CommandResult {
        summary: vec![format!("impedance match at drive {:.6} MHz (angle gap {gap:.6} rad)", to_mhz(omega))],
        outputs: vec![output(t, None)],
    })
}

/// ω̃_31 and ω̃_41 over the drive grid, in (MHz, GHz).
fn transition_guides(params: &SystemParams, drives: &[f64]) -> Result<Vec<Guide>, CliError> {
    let rows = rate_sweep(params, drives)?;
    Ok(vec![
        Guide {
            label: "omega31".into(),
            points: rows.iter().map(|r| (to_mhz(r.omega_drive), to_ghz(r.omega_31))).collect(),
        },
        Guide {
            label: "omega41".into(),
            points: rows.iter().map(|r| (to_mhz(r.omega_drive), to_ghz(r.omega_41))).collect(),
        },
    ])
}

fn reflection(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let drives = config.drives(Command::Reflection)?;
    let signals = config.signal_grid.values();
    let map = reflection_map(&config.params, &drives, &signals)?;
    let mut t = ResultTable::new("reflection", &["drive_MHz", "signal_GHz", "abs_r", "re_r", "im_r"], footer.clone());
    for pt in &map {
        t.push(vec![to_mhz(pt.omega_drive), to_ghz(pt.omega_s), pt.r.norm(), pt.r.re, pt.r.im]);
    }
    let mags: Vec<f64> = map.iter().map(|pt| pt.r.norm()).collect();
    let mut spots = ResultTable::new("reflection_spots", &["drive_MHz", "signal_GHz", "abs_r"], footer);
    for (i, j) in near_zero_spots(&mags, drives.len(), signals.len(), SPOT_THRESHOLD) {
        spots.push(vec![to_mhz(drives[i]), to_ghz(signals[j]), mags[i * signals.len() + j]]);
    }
    let summary = spots
        .rows
        .iter()
        .map(|r| format!("|r| = {:.4} at drive {:.2} MHz, signal {:.4} GHz", r[2], r[0], r[1]))
        .collect();
    let plot = PlotSpec::Heatmap {
        x: "drive_MHz".into(),
        y: "signal_GHz".into(),
        z: "abs_r".into(),
        guides: transition_guides(&config.params, &drives)?,
    };
    Ok(CommandResult { outputs: vec![output(t, Some(plot)), output(spots, None)], summary })
}

fn stage_summary(name: &str, label: &str, result: &StageResult, footer: Footer) -> ResultTable {
    let mut t = ResultTable::new(name, &["photons", label], footer);
    for (k, &p) in result.probabilities.iter().enumerate() {
        t.push(vec![k as f64, p]);
    }
    t
}

fn capture(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let c = config.capture()?;
    let r = run_capture(&c)?;
    let curves: Vec<String> = (0..r.curves.len()).map(|k| format!("p{k}")).collect();
    let mut columns = vec!["t_ns"];
    columns.extend(curves.iter().map(String::as_str));
    columns.push("pbar0");
    let mut t = ResultTable::new("capture", &columns, footer.clone());
    for (i, &time) in r.times.iter().enumerate() {
        let mut row = vec![time];
        row.extend(r.curves.iter().map(|c| c[i]));
        row.push(r.reference[i]);
        t.push(row);
    }
    let summary = r.probabilities.iter().enumerate().map(|(k, p)| format!("P{k} = {p:.6}")).collect();
    let mut ys: Vec<&str> = curves.iter().map(String::as_str).collect();
    ys.push("pbar0");
    let plot = line("t_ns", &ys);
    Ok(CommandResult {
        outputs: vec![output(t, Some(plot)), output(stage_summary("capture_summary", "P", &r, footer), None)],
        summary,
    })
}

fn sweep_length(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let c = config.capture()?;
    let lengths = config.length_grid.values();
    let s = sweep_pulse_length(&c, &lengths, &config.gammas)?;
    let mut t = ResultTable::new("sweep_length", &["gamma_MHz", "length_ns", "p1"], footer.clone());
    let mut best = ResultTable::new("sweep_length_optimum", &["gamma_MHz", "l_opt_ns", "p1_max"], footer);
    let mut summary = Vec::new();
    for (g, (&gamma, row)) in s.gammas.iter().zip(&s.p1).enumerate() {
        for (&l, &p) in lengths.iter().zip(row) {
            t.push(vec![to_mhz(gamma), l, p]);
        }
        let l_opt = s.optimum()[g];
        let p_max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        best.push(vec![to_mhz(gamma), l_opt, p_max]);
        summary.push(format!("gamma {:.4} MHz: l_opt = {l_opt} ns, P1 = {p_max:.6}", to_mhz(gamma)));
    }
    let plot = PlotSpec::Line { x: "length_ns".into(), ys: vec!["p1".into()], group: Some("gamma_MHz".into()) };
    Ok(CommandResult { outputs: vec![output(t, Some(plot)), output(best, None)], summary })
}

fn sweep_map(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let mut c = config.capture()?;
    c.photons = config.photons.clamp(1, 2);
    let drives = config.drives(Command::SweepMap)?;
    let signals = config.signal_grid.values();
    let map = sweep_drive_map(&c, &drives, &signals)?;
    let two = c.photons == 2;
    let columns: &[&str] = if two { &["drive_MHz", "signal_GHz", "p1", "p2"] } else { &["drive_MHz", "signal_GHz", "p1"] };
    let mut t = ResultTable::new("sweep_map", columns, footer.clone());
    let mut ratio = ResultTable::new("sweep_map_ratio", &["drive_MHz", "signal_GHz", "ratio"], footer);
    for pt in &map {
        let (d, s) = (to_mhz(pt.omega_drive), to_ghz(pt.omega_s));
        match pt.p2 {
            Some(p2) => {
                t.push(vec![d, s, pt.p1, p2]);
                if pt.p1 >= RATIO_FLOOR {
                    ratio.push(vec![d, s, p2 / pt.p1]);
                }
            }
            None => t.push(vec![d, s, pt.p1]),
        }
    }
    let best = map.iter().max_by(|a, b| a.p1.total_cmp(&b.p1)).expect("non-empty grid");
    let summary = vec![format!(
        "max P1 = {:.6} at drive {:.2} MHz, signal {:.4} GHz",
        best.p1,
        to_mhz(best.omega_drive),
        to_ghz(best.omega_s)
    )];
    let guides = transition_guides(&config.params, &drives)?;
    let heat = |z: &str| PlotSpec::Heatmap {
        x: "drive_MHz".into(),
        y: "signal_GHz".into(),
        z: z.into(),
        guides: guides.clone(),
    };
    let mut outputs = vec![output(t, Some(heat("p1")))];
    if two {
        outputs.push(output(ratio, Some(heat("ratio"))));
    }
    Ok(CommandResult { outputs, summary })
}

fn reset(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let c = config.reset();
    let r = run_reset(&c)?;
    let label = match c.initial {
        Qubit::Excited => "pe",
        Qubit::Ground => "pg",
    };
    let (t_i, _) = stage_window(lambda_core::protocols::RESET_LENGTH, lambda_core::protocols::RESET_BETA);
    let mut t = ResultTable::new("reset", &["t_ns", label, "pbar0", "free_decay"], footer.clone());
    for (i, &time) in r.times.iter().enumerate() {
        let free = match c.initial {
            Qubit::Excited => (-c.params.gamma * (time - t_i)).exp(),
            Qubit::Ground => 0.0,
        };
        t.push(vec![time, r.curves[0][i], r.reference[i], free]);
    }
    let p = r.probability(0);
    let mut s = ResultTable::new("reset_summary", &["n_mean", label], footer);
    s.push(vec![c.n_mean, p]);
    Ok(CommandResult {
        outputs: vec![output(t, Some(line("t_ns", &[label, "free_decay"]))), output(s, None)],
        summary: vec![format!("{label}(t_f) = {p:.6} for <n> = {}", c.n_mean)],
    })
}

fn sweep_reset(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let template = config.reset();
    let drives = config.drives(Command::SweepReset)?;
    let resets = config.reset_grid.values();
    let map = sweep_reset_map(&template, &drives, &resets)?;
    let mut t = ResultTable::new("sweep_reset", &["drive_MHz", "reset_GHz", "p"], footer.clone());
    for pt in &map {
        t.push(vec![to_mhz(pt.omega_drive), to_ghz(pt.omega_reset), pt.probability]);
    }
    let mut valley =
        ResultTable::new("sweep_reset_valley", &["drive_MHz", "argmin_reset_GHz", "p_min", "omega32_GHz"], footer);
    let mut guide = Vec::new();
    for (i, &d) in drives.iter().enumerate() {
        let row = &map[i * resets.len()..(i + 1) * resets.len()];
        let best = row.iter().min_by(|a, b| a.probability.total_cmp(&b.probability)).expect("non-empty grid");
        let w32 = dressed_spectrum(&template.params, d)?.omega(3, 2);
        valley.push(vec![to_mhz(d), to_ghz(best.omega_reset), best.probability, to_ghz(w32)]);
        guide.push((to_mhz(d), to_ghz(w32)));
    }
    let best = map.iter().min_by(|a, b| a.probability.total_cmp(&b.probability)).expect("non-empty grid");
    let plot = PlotSpec::Heatmap {
        x: "drive_MHz".into(),
        y: "reset_GHz".into(),
        z: "p".into(),
        guides: vec![Guide { label: "omega32".into(), points: guide }],
    };
    Ok(CommandResult {
        outputs: vec![output(t, Some(plot)), output(valley, None)],
        summary: vec![format!(
            "min p = {:.6} at drive {:.2} MHz, reset {:.4} GHz",
            best.probability,
            to_mhz(best.omega_drive),
            to_ghz(best.omega_reset)
        )],
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditRow {
    /// Photon number of the capture response; 0 for reset runs.
    pub photons: usize,
    pub value: f64,
    pub dt_delta: f64,
    pub n_max_delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub stage: Stage,
    pub dt: f64,
    pub n_max: usize,
    pub rows: Vec<AuditRow>,
    pub dt_threshold: f64,
    pub n_max_threshold: f64,
}

impl AuditReport {
    pub fn dt_flagged(&self) -> bool {
        self.rows.iter().any(|r| !(r.dt_delta < self.dt_threshold))
    }

    pub fn n_max_flagged(&self) -> bool {
        self.rows.iter().any(|r| !(r.n_max_delta < self.n_max_threshold))
    }
}

/// Reruns the configured stage with dt/2 and with n_max + 1.
pub fn convergence_audit(config: &RunConfig) -> Result<AuditReport, CliError> {
    let (base_params, threshold) = match config.stage {
        Stage::Capture => (config.capture_params(), NMAX_THRESHOLD_CAPTURE),
        Stage::Reset => (config.reset_params(), NMAX_THRESHOLD_RESET),
    };
    let variants = [
        base_params,
        base_params.with_dt(base_params.dt / 2.0),
        base_params.with_n_max(base_params.n_max + 1),
    ];
    let run = |p: SystemParams| -> Result<Vec<f64>, CliError> {
        Ok(match config.stage {
            Stage::Capture => {
                let mut c = config.capture()?;
                c.params = p;
                run_capture(&c)?.probabilities
            }
            Stage::Reset => {
                let mut c = config.reset();
                c.params = p;
                run_reset(&c)?.probabilities
            }
        })
    };
    let runs = variants.par_iter().map(|&p| run(p)).collect::<Result<Vec<_>, _>>()?;
    let (base, fine, big) = (&runs[0], &runs[1], &runs[2]);
    let rows = base
        .iter()
        .enumerate()
        .map(|(k, &v)| AuditRow { photons: k, value: v, dt_delta: (fine[k] - v).abs(), n_max_delta: (big[k] - v).abs() })
        .collect();
    Ok(AuditReport {
        stage: config.stage,
        dt: base_params.dt,
        n_max: base_params.n_max,
        rows,
        dt_threshold: DT_THRESHOLD,
        n_max_threshold: threshold,
    })
}

fn audit(config: &RunConfig, footer: Footer) -> Result<CommandResult, CliError> {
    let report = convergence_audit(config)?;
    let first = match report.stage {
        Stage::Capture => "photons",
        Stage::Reset => "n_mean",
    };
    let mut t = ResultTable::new("audit", &[first, "P", "dt_delta", "n_max_delta", "dt_flag", "n_max_flag"], footer);
    let mut summary = Vec::new();
    for r in &report.rows {
        let dt_flag = !(r.dt_delta < report.dt_threshold);
        let n_flag = !(r.n_max_delta < report.n_max_threshold);
        let (key, label) = match report.stage {
            Stage::Capture => (r.photons as f64, format!("P{}", r.photons)),
            Stage::Reset => (config.n_mean, "p(t_f)".to_string()),
        };
        t.push(vec![key, r.value, r.dt_delta, r.n_max_delta, dt_flag as u8 as f64, n_flag as u8 as f64]);
        summary.push(format!(
            "{label} = {:.6}: dt/2 delta {:.3e}{}, n_max+1 delta {:.3e}{}",
            r.value,
            r.dt_delta,
            if dt_flag { " FLAGGED" } else { "" },
            r.n_max_delta,
            if n_flag { " FLAGGED" } else { "" }
        ));
    }
    Ok(CommandResult { outputs: vec![output(t, None)], summary })
}

/// Tables in `dir` with a provenance footer, and whether it carries `hash`.
pub fn check_footers(dir: &Path, hash: &str) -> Result<Vec<(PathBuf, bool)>, CliError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut found = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for path in entries {
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        if let Some(h) = footer_hash(&text) {
            found.push((path.clone(), h == hash));
        }
    }
    Ok(found)
}
