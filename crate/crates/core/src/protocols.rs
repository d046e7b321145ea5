//! Capture and reset stages of the detector cycle and the parameter sweeps
//! built on them.

use rayon::prelude::*;

use crate::dynamics::{evolve_hierarchy, HierarchyProblem, Trajectory, MAX_ORDER};
use crate::error::{invalid, Result};
use crate::pulses::{drive_envelope, rabi_envelope, reset_envelope, signal_envelope, PulseEnvelope, SignalShape};
use crate::quantum::{BasisState, Qubit};
use crate::reflection::steady_reflection;
use crate::system::{dressed_spectrum, find_impedance_match, mixing_angle, SystemParams};
use crate::units::{ghz, mhz};
use crate::C64;

/// Drive shoulder width w (ns).
pub const DEFAULT_WIDTH: f64 = 30.0;
/// Idle time added on both sides of the drive plateau (ns).
pub const STAGE_MARGIN: f64 = 50.0;
pub const RESET_LENGTH: f64 = 100.0;
pub const RESET_BETA: f64 = 2.0;
/// Fock cutoff used for reset runs unless overridden.
pub const RESET_N_MAX: usize = 4;

/// `(t_i, t_f) = (−βl/2 − 50, βl/2 + 50)`.
pub fn stage_window(length: f64, beta: f64) -> (f64, f64) {
    let half = 0.5 * beta * length + STAGE_MARGIN;
    (-half, half)
}

/// Inclusive uniform grid `start, start + step, ..., stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(invalid("grid needs step > 0 and stop >= start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaptureConfig {
    pub params: SystemParams,
    pub shape: SignalShape,
    pub length: f64,
    pub beta: f64,
    pub width: f64,
    pub omega_drive: f64,
    pub omega_s: f64,
    /// Responses are computed for 0..=photons signal photons.
    pub photons: usize,
}

impl CaptureConfig {
    /// Gaussian signal with l = 100 ns at ω_s/2π = 10.007 GHz, drive at the
    /// impedance-matching amplitude.
    pub fn new(params: SystemParams) -> Result<Self> {
        let omega_drive = find_impedance_match(&params)?;
        Ok(Self {
            params,
            shape: SignalShape::Gaussian,
            length: 100.0,
            beta: SignalShape::Gaussian.default_beta(),
            width: DEFAULT_WIDTH,
            omega_drive,
            omega_s: ghz(10.007),
            photons: 1,
        })
    }

    /// Switches the signal shape together with its default β.
    pub fn with_shape(mut self, shape: SignalShape) -> Self {
        self.shape = shape;
        self.beta = shape.default_beta();
        self
    }

    pub fn window(&self) -> (f64, f64) {
        stage_window(self.length, self.beta)
    }

    /// Signal wavefunction in the frame rotating at ω_s.
    pub fn signal(&self) -> Result<PulseEnvelope> {
        signal_envelope(self.shape, self.length, self.beta, 0.0)
    }

    /// Waveguide drive amplitude f_d.
    pub fn drive(&self) -> Result<PulseEnvelope> {
        drive_envelope(self.omega_drive, self.length, self.beta, self.width, 0.0, self.params.gamma_prime)
    }

    /// Rabi drive √γ'·f_d.
    pub fn rabi_drive(&self) -> Result<PulseEnvelope> {
        rabi_envelope(self.omega_drive, self.length, self.beta, self.width, 0.0)
    }

    pub fn problem(&self) -> Result<HierarchyProblem> {
        if self.photons > MAX_ORDER {
            return Err(invalid(format!("at most {MAX_ORDER} signal photons are supported")));
        }
        self.params.validate()?;
        let (t_i, t_f) = self.window();
        let mut p = HierarchyProblem::new(self.params, t_i, t_f, self.omega_s);
        p.order = self.photons;
        p.signal = (self.photons > 0).then(|| self.signal()).transpose()?;
        p.drive = Some(self.rabi_drive()?);
        Ok(p)
    }
}

/// Curves and end-of-stage probabilities of one stage run.
#[derive(Clone, Debug, PartialEq)]
pub struct StageResult {
    pub times: Vec<f64>,
    /// p_k(t) for k = 0..curves.len(); a single curve for reset runs.
    pub curves: Vec<Vec<f64>>,
    /// Adiabatic reference p̄_0(t).
    pub reference: Vec<f64>,
    /// End values P_k = p_k(t_f).
    pub probabilities: Vec<f64>,
}

impl StageResult {
    fn from_trajectory(traj: &Trajectory, reference: Vec<f64>, curves: usize) -> Self {
        let curves: Vec<Vec<f64>> = (0..curves).map(|k| traj.excitation(k)).collect();
        let probabilities = curves.iter().map(|c| *c.last().expect("non-empty")).collect();
        Self { times: traj.times.clone(), curves, reference, probabilities }
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.probabilities[k]
    }
}

/// `p̄_0(t) = sin²θ(t)` with θ from the instantaneous Rabi drive √γ'|f_d(t)|.
pub fn adiabatic_reference(drive: &PulseEnvelope, params: &SystemParams, times: &[f64]) -> Vec<f64> {
    reference_from_rabi(&drive.with_scale(params.gamma_prime.sqrt()), params, times)
}

fn reference_from_rabi(rabi: &PulseEnvelope, params: &SystemParams, times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| mixing_angle(rabi.magnitude(t), params.drive_detuning()).sin().powi(2))
        .collect()
}

pub fn run_capture(config: &CaptureConfig) -> Result<StageResult> {
    let problem = config.problem()?;
    let traj = evolve_hierarchy(&problem)?;
    let reference = reference_from_rabi(problem.drive.as_ref().expect("drive"), &config.params, &traj.times);
    Ok(StageResult::from_trajectory(&traj, reference, config.photons + 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResetConfig {
    pub params: SystemParams,
    pub omega_drive: f64,
    pub omega_reset: f64,
    pub n_mean: f64,
    pub initial: Qubit,
    pub width: f64,
}

impl ResetConfig {
    /// Ω_d/2π = 44 MHz, ω_reset/2π = 9.860 GHz, ⟨n⟩ = 10, starting from |e,0⟩.
    pub fn new(params: SystemParams) -> Self {
        Self {
            params,
            omega_drive: mhz(44.0),
            omega_reset: ghz(9.860),
            n_mean: 10.0,
            initial: Qubit::Excited,
            width: DEFAULT_WIDTH,
        }
    }

    pub fn window(&self) -> (f64, f64) {
        stage_window(RESET_LENGTH, RESET_BETA)
    }

    pub fn problem(&self) -> Result<HierarchyProblem> {
        self.params.validate()?;
        let (t_i, t_f) = self.window();
        let mut p = HierarchyProblem::new(self.params, t_i, t_f, self.omega_reset);
        p.drive = Some(rabi_envelope(self.omega_drive, RESET_LENGTH, RESET_BETA, self.width, 0.0)?);
        if self.n_mean > 0.0 {
            p.classical.push(reset_envelope(self.n_mean, RESET_LENGTH, 0.0)?);
        } else if self.n_mean < 0.0 {
            return Err(invalid("mean photon number must be non-negative"));
        }
        p.initial = BasisState::new(self.initial, 0);
        Ok(p)
    }
}

/// Reset stage driven by a classical pulse; the single curve is the qubit
/// excitation probability (p_g or p_e depending on the initial state).
pub fn run_reset(config: &ResetConfig) -> Result<StageResult> {
    let problem = config.problem()?;
    let traj = evolve_hierarchy(&problem)?;
    let reference = reference_from_rabi(problem.drive.as_ref().expect("drive"), &config.params, &traj.times);
    Ok(StageResult::from_trajectory(&traj, reference, 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthSweep {
    pub lengths: Vec<f64>,
    pub gammas: Vec<f64>,
    /// P_1 indexed `[gamma][length]`.
    pub p1: Vec<Vec<f64>>,
}

impl LengthSweep {
    /// Grid argmax l_opt for each γ.
    pub fn optimum(&self) -> Vec<f64> {
        self.p1
            .iter()
            .map(|row| {
                let (i, _) = row
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
                self.lengths[i]
            })
            .collect()
    }
}

/// One-photon capture probability over a grid of pulse lengths and qubit
/// decay rates. β and w follow the template.
pub fn sweep_pulse_length(template: &CaptureConfig, lengths: &[f64], gammas: &[f64]) -> Result<LengthSweep> {
    let tasks: Vec<(usize, usize)> =
        (0..gammas.len()).flat_map(|g| (0..lengths.len()).map(move |l| (g, l))).collect();
    let values: Vec<f64> = tasks
        .par_iter()
        .map(|&(g, l)| {
            let mut c = template.clone();
            c.params = c.params.with_gamma(gammas[g]);
            c.length = lengths[l];
            c.photons = 1;
            run_capture(&c).map(|r| r.probability(1))
        })
        .collect::<Result<_>>()?;
    let p1 = values.chunks(lengths.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(LengthSweep { lengths: lengths.to_vec(), gammas: gammas.to_vec(), p1 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapturePoint {
    pub omega_drive: f64,
    pub omega_s: f64,
    pub p1: f64,
    /// Present when the template asks for two photons.
    pub p2: Option<f64>,
}

/// Capture map over Ω_d × ω_s, row-major with Ω_d as the slow index.
pub fn sweep_drive_map(template: &CaptureConfig, drives: &[f64], signals: &[f64]) -> Result<Vec<CapturePoint>> {
    let photons = template.photons.clamp(1, MAX_ORDER);
    grid_pairs(drives, signals)
        .par_iter()
        .map(|&(od, os)| {
            let mut c = template.clone();
            c.omega_drive = od;
            c.omega_s = os;
            c.photons = photons;
            let r = run_capture(&c)?;
            Ok(CapturePoint {
                omega_drive: od,
                omega_s: os,
                p1: r.probability(1),
                p2: (photons >= 2).then(|| r.probability(2)),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResetPoint {
    pub omega_drive: f64,
    pub omega_reset: f64,
    pub probability: f64,
}

/// End-of-reset excitation over Ω_d × ω_reset, row-major with Ω_d slow.
pub fn sweep_reset_map(template: &ResetConfig, drives: &[f64], resets: &[f64]) -> Result<Vec<ResetPoint>> {
    grid_pairs(drives, resets)
        .par_iter()
        .map(|&(od, or)| {
            let mut c = template.clone();
            c.omega_drive = od;
            c.omega_reset = or;
            let r = run_reset(&c)?;
            Ok(ResetPoint { omega_drive: od, omega_reset: or, probability: r.probability(0) })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateRow {
    pub omega_drive: f64,
    /// κ̃_31, κ̃_32, κ̃_41, κ̃_42
    pub rates: [f64; 4],
    pub omega_31: f64,
    pub omega_41: f64,
    pub omega_32: f64,
}

pub fn rate_sweep(params: &SystemParams, drives: &[f64]) -> Result<Vec<RateRow>> {
    drives
        .iter()
        .map(|&od| {
            let s = dressed_spectrum(params, od)?;
            Ok(RateRow {
                omega_drive: od,
                rates: [s.kappa(3, 1), s.kappa(3, 2), s.kappa(4, 1), s.kappa(4, 2)],
                omega_31: s.omega(3, 1),
                omega_41: s.omega(4, 1),
                omega_32: s.omega(3, 2),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionPoint {
    pub omega_drive: f64,
    pub omega_s: f64,
    pub r: C64,
}

/// Weak-field reflection over Ω_d × ω_s, row-major with Ω_d slow.
pub fn reflection_map(params: &SystemParams, drives: &[f64], signals: &[f64]) -> Result<Vec<ReflectionPoint>> {
    grid_pairs(drives, signals)
        .par_iter()
        .map(|&(od, os)| Ok(ReflectionPoint { omega_drive: od, omega_s: os, r: steady_reflection(params, od, os)? }))
        .collect()
}

fn grid_pairs(slow: &[f64], fast: &[f64]) -> Vec<(f64, f64)> {
    slow.iter().flat_map(|&a| fast.iter().map(move |&b| (a, b))).collect()
}

/// Grid points `(row, col)` whose value is strictly below every neighbor
/// (including diagonals) of a row-major `rows × cols` map.
pub fn local_minima(values: &[f64], rows: usize, cols: usize) -> Vec<(usize, usize)> {
    assert_eq!(values.len(), rows * cols, "map size mismatch");
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = values[i * cols + j];
            let lower = (i.saturating_sub(1)..=(i + 1).min(rows - 1))
                .flat_map(|a| (j.saturating_sub(1)..=(j + 1).min(cols - 1)).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (i, j))
                .all(|(a, b)| v < values[a * cols + b]);
            if lower {
                out.push((i, j));
            }
        }
    }
    out
}

/// Connected regions (8-neighbor) of a row-major map where `values < threshold`,
/// each reported by its smallest point.
pub fn near_zero_spots(values: &[f64], rows: usize, cols: usize, threshold: f64) -> Vec<(usize, usize)> {
    assert_eq!(values.len(), rows * cols, "map size mismatch");
    let mut seen = vec![false; values.len()];
    let mut spots = Vec::new();
    for start in 0..values.len() {
        if seen[start] || !(values[start] < threshold) {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut best = start;
        while let Some(idx) = stack.pop() {
            if values[idx] < values[best] {
                best = idx;
            }
            let (i, j) = (idx / cols, idx % cols);
            for a in i.saturating_sub(1)..=(i + 1).min(rows - 1) {
                for b in j.saturating_sub(1)..=(j + 1).min(cols - 1) {
                    let k = a * cols + b;
                    if !seen[k] && values[k] < threshold {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
        }
        spots.push((best / cols, best % cols));
    }
    spots
}
