//! Acceptance criteria for the detector model. Prints one verdict line per
//! criterion and exits non-zero if a criterion outside `KNOWN_RED` fails.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use lambda_cli::{convergence_audit, parse_config, run_command, Command};
use lambda_core::dynamics::{evolve_hierarchy, evolve_hierarchy_with, reconstruct_fock};
use lambda_core::oracle::{small_alpha_oracle, DEFAULT_ALPHAS};
use lambda_core::protocols::{
    grid, run_capture, run_reset, sweep_drive_map, sweep_pulse_length, CaptureConfig, ResetConfig, RESET_N_MAX,
};
use lambda_core::pulses::SignalShape;
use lambda_core::quantum::{expectation, is_hermitian, Operators, Qubit};
use lambda_core::system::{dressed_spectrum, find_impedance_match, SystemParams};
use lambda_core::units::{ghz, mhz, to_mhz};
use lambda_core::C64;
use nalgebra::{DMatrix, SymmetricEigen};

/// Criteria that currently fail; see the project notes for the analysis.
const KNOWN_RED: [usize; 2] = [6, 7];

type Check = Result<(bool, String), String>;

struct Verdict {
    id: usize,
    pass: bool,
}

fn criterion(id: usize, title: &str, budget_s: f64, body: impl FnOnce() -> Check) -> Verdict {
    let start = Instant::now();
    let outcome = body();
    let secs = start.elapsed().as_secs_f64();
    let in_time = secs < budget_s;
    let (pass, detail) = match outcome {
        Ok((ok, detail)) => (ok && in_time, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let timing = if in_time { format!("{secs:.2} s") } else { format!("{secs:.2} s, over the {budget_s} s budget") };
    println!("criterion {id} {title}: {} ({detail}; {timing})", if pass { "PASS" } else { "FAIL" });
    Verdict { id, pass }
}

fn reference_device() -> SystemParams {
    SystemParams::reference_device()
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn impedance_match() -> Check {
    let p = reference_device();
    let imp = find_impedance_match(&p).map_err(e)?;
    let s = dressed_spectrum(&p, imp).map_err(e)?;
    let gap = ((s.angles[1] - s.angles[0]).abs() - FRAC_PI_4).abs();
    let via_cli = run_command(Command::Match, &parse_config("").map_err(e)?).map_err(e)?;
    let cli_drive = via_cli.table("match").and_then(|t| t.column("drive_MHz")).ok_or("match table missing")?[0];
    let f = to_mhz(imp);
    let ok = (f - 13.2).abs() <= 0.1 && gap <= 1e-3 && (cli_drive - f).abs() < 1e-6;
    Ok((ok, format!("drive/2pi = {f:.4} MHz, | |theta1-theta0| - pi/4 | = {gap:.2e} rad, cli {cli_drive:.4} MHz")))
}

fn rate_structure() -> Check {
    let p = reference_device();
    let kp = p.kappa_prime;
    let off = dressed_spectrum(&p, 0.0).map_err(e)?;
    let off_rates = [off.kappa(3, 1), off.kappa(3, 2), off.kappa(4, 1), off.kappa(4, 2)];
    let target = [0.0, kp, kp, 0.0];
    let off_err = off_rates.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let on = dressed_spectrum(&p, find_impedance_match(&p).map_err(e)?).map_err(e)?;
    let on_err =
        [on.kappa(3, 1), on.kappa(3, 2), on.kappa(4, 1), on.kappa(4, 2)].iter().map(|k| (k - kp / 2.0).abs()).fold(0.0, f64::max);
    let ok = off_err <= 1e-3 * kp && on_err <= 1e-3 * kp;
    Ok((ok, format!("max deviation at drive 0: {:.2e} kappa', at the match: {:.2e} kappa'", off_err / kp, on_err / kp)))
}

fn reflection_dips() -> Check {
    let config = parse_config("").map_err(e)?;
    let p = config.params;
    if p.kappa != p.kappa_prime {
        return Err("empty-cavity limit needs kappa = kappa'".into());
    }
    let imp = to_mhz(find_impedance_match(&p).map_err(e)?);
    let result = run_command(Command::Reflection, &config).map_err(e)?;
    let map = result.table("reflection").ok_or("reflection table missing")?;
    let spots = result.table("reflection_spots").ok_or("spot table missing")?;
    let spot_drives = spots.column("drive_MHz").unwrap();
    let spot_r = spots.column("abs_r").unwrap();
    let near = spot_drives.iter().all(|d| (d - imp).abs() <= 0.5) && spot_r.iter().all(|&r| r < 0.05);
    let drives = map.column("drive_MHz").unwrap();
    let abs_r = map.column("abs_r").unwrap();
    let empty = drives.iter().zip(&abs_r).filter(|(d, _)| **d == 0.0).map(|(_, r)| (r - 1.0).abs()).fold(0.0, f64::max);
    let ok = spot_drives.len() == 2 && near && empty <= 1e-6;
    let listed: Vec<String> = spot_drives.iter().zip(&spot_r).map(|(d, r)| format!("{d:.2} MHz |r|={r:.4}")).collect();
    Ok((ok, format!("{} dips [{}] vs match {imp:.3} MHz, max ||r|-1| at drive 0 = {empty:.1e}", listed.len(), listed.join(", "))))
}

fn dark_config(length: f64, width: f64) -> Result<CaptureConfig, String> {
    let mut c = CaptureConfig::new(reference_device()).map_err(e)?;
    c.photons = 0;
    c.length = length;
    c.beta = 2.0;
    c.width = width;
    Ok(c)
}

fn dark_count() -> Check {
    let p0 = run_capture(&dark_config(200.0, 30.0)?).map_err(e)?.probability(0);
    let w30 = run_capture(&dark_config(100.0, 30.0)?).map_err(e)?.probability(0);
    let w20 = run_capture(&dark_config(100.0, 20.0)?).map_err(e)?.probability(0);
    Ok((p0 <= 5e-4 && w30 < w20, format!("P0(l=200) = {p0:.3e}, P0(w=30) = {w30:.4e} vs P0(w=20) = {w20:.4e}")))
}

fn efficiency() -> Check {
    let base = CaptureConfig::new(reference_device()).map_err(e)?;
    let start = Instant::now();
    let a = run_capture(&base).map_err(e)?.probability(1);
    let ta = start.elapsed().as_secs_f64();
    let mut long = base.clone();
    long.params = long.params.with_gamma(mhz(0.02));
    long.length = 200.0;
    let start = Instant::now();
    let b = run_capture(&long).map_err(e)?.probability(1);
    let tb = start.elapsed().as_secs_f64();
    let ok = (a - 0.89).abs() <= 0.02 && (b - 0.96).abs() <= 0.02 && ta < 30.0 && tb < 30.0;
    Ok((ok, format!("P1(l=100, gamma=0.1 MHz) = {a:.4} in {ta:.2} s, P1(l=200, gamma=0.02 MHz) = {b:.4} in {tb:.2} s")))
}

fn pulse_length_curve() -> Check {
    let lengths = grid(20.0, 300.0, 20.0).map_err(e)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for shape in [SignalShape::Gaussian, SignalShape::Square, SignalShape::Exponential] {
        let template = CaptureConfig::new(reference_device()).map_err(e)?.with_shape(shape);
        let s = sweep_pulse_length(&template, &lengths, &[0.0, mhz(0.1)]).map_err(e)?;
        let lossless = &s.p1[0];
        let monotone = lossless.windows(2).all(|w| w[1] >= w[0] - 1e-9);
        let (worst_l, worst) = lengths
            .iter()
            .zip(lossless)
            .filter(|(l, _)| **l >= 100.0)
            .fold((0.0, f64::INFINITY), |acc, (&l, &p)| if p < acc.1 { (l, p) } else { acc });
        let lossy = &s.p1[1];
        let best = (0..lossy.len()).fold(0, |b, i| if lossy[i] > lossy[b] { i } else { b });
        let interior = best > 0 && best + 1 < lossy.len();
        let shape_ok = monotone && worst > 0.9;
        ok &= shape_ok;
        if shape == SignalShape::Gaussian {
            ok &= interior && (lengths[best] - 100.0).abs() <= 20.0;
        }
        notes.push(format!(
            "{}: lossless {} min P1(l>=100) = {worst:.4} at {worst_l} ns, gamma=0.1 MHz peak at {} ns",
            shape.name(),
            if monotone { "nondecreasing" } else { "not monotone" },
            lengths[best]
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn two_photon_saturation() -> Check {
    let mut template = CaptureConfig::new(reference_device()).map_err(e)?;
    template.photons = 2;
    let drives: Vec<f64> = linspace(0.0, 30.0, 20).into_iter().map(mhz).collect();
    let signals: Vec<f64> = linspace(9.97, 10.03, 20).into_iter().map(ghz).collect();
    let map = sweep_drive_map(&template, &drives, &signals).map_err(e)?;
    let (mut low, mut low_bad, mut high, mut high_bad, mut skipped) = (0, 0, 0, 0, 0);
    let (mut worst_low, mut worst_high) = (0.0f64, 0.0f64);
    for pt in &map {
        let p2 = pt.p2.ok_or("two-photon response missing")?;
        if pt.p1 < 1e-9 {
            skipped += 1;
        } else if pt.p1 < 0.2 {
            low += 1;
            let dev = (p2 / pt.p1 - 2.0).abs();
            worst_low = worst_low.max(dev);
            low_bad += (dev > 0.3) as usize;
        } else if pt.p1 > 0.7 {
            high += 1;
            let ratio = p2 / pt.p1;
            worst_high = worst_high.max(ratio);
            high_bad += (ratio > 1.05) as usize;
        }
    }
    Ok((
        low_bad == 0 && high_bad == 0,
        format!(
            "P1<0.2: {low_bad}/{low} outside 2 +/- 0.3 (max |ratio-2| = {worst_low:.3}); \
             P1>0.7: {high_bad}/{high} above 1.05 P1 (max ratio {worst_high:.3}); {skipped} points with P1 = 0 skipped"
        ),
    ))
}

fn reset_config(n_mean: f64, initial: Qubit) -> ResetConfig {
    let mut c = ResetConfig::new(reference_device().with_n_max(RESET_N_MAX));
    c.omega_drive = mhz(44.0);
    c.omega_reset = ghz(9.860);
    c.n_mean = n_mean;
    c.initial = initial;
    c
}

fn reset() -> Check {
    let pe10 = run_reset(&reset_config(10.0, Qubit::Excited)).map_err(e)?.probability(0);
    let pe20 = run_reset(&reset_config(20.0, Qubit::Excited)).map_err(e)?.probability(0);
    let mut pg_max = 0.0f64;
    for n in [0.0, 5.0, 10.0, 15.0, 20.0] {
        pg_max = pg_max.max(run_reset(&reset_config(n, Qubit::Ground)).map_err(e)?.probability(0));
    }
    let mut idle = reset_config(0.0, Qubit::Excited);
    idle.omega_drive = 0.0;
    let free = run_reset(&idle).map_err(e)?.probability(0);
    let ok = (pe10 - 0.015).abs() <= 0.005 && (pe20 - 0.007).abs() <= 0.004 && pg_max < 0.005 && (free - 0.829).abs() <= 0.005;
    Ok((ok, format!("Pe(10) = {pe10:.5}, Pe(20) = {pe20:.5}, max Pg(<n> <= 20) = {pg_max:.2e}, undriven pe(t_f) = {free:.4}")))
}

fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn properties() -> Check {
    let mut capture = CaptureConfig::new(reference_device()).map_err(e)?;
    capture.photons = 2;
    let problem = capture.problem().map_err(e)?;
    let (mut trace_err, mut pairing, mut lowest) = (0.0f64, true, f64::INFINITY);
    evolve_hierarchy_with(&problem, 100, |state| {
        for m in 0..=2 {
            for n in 0..=2 {
                let target = if (m, n) == (0, 0) { 1.0 } else { 0.0 };
                trace_err = trace_err.max((state.component(m, n).trace() - target).norm());
                if m == n {
                    pairing &= is_hermitian(&state.component(m, m), 1e-12);
                } else {
                    pairing &= state.component(n, m) == state.component(m, n).adjoint();
                }
            }
        }
        for k in 0..=2 {
            if let Ok(f) = reconstruct_fock(state, k) {
                pairing &= is_hermitian(&f.matrix, 1e-9);
                lowest = lowest.min(min_eigenvalue(&f.matrix));
            }
        }
    })
    .map_err(e)?;

    let cap_audit = convergence_audit(&parse_config("photons = 2\n").map_err(e)?).map_err(e)?;
    let reset_audit = convergence_audit(&parse_config("stage = \"reset\"\n").map_err(e)?).map_err(e)?;
    let worst = |rows: &[lambda_cli::commands::AuditRow], f: fn(&lambda_cli::commands::AuditRow) -> f64| {
        rows.iter().map(f).fold(0.0, f64::max)
    };
    let cap_dt = worst(&cap_audit.rows, |r| r.dt_delta);
    let cap_n = worst(&cap_audit.rows, |r| r.n_max_delta);
    let reset_dt = worst(&reset_audit.rows, |r| r.dt_delta);
    let reset_n = worst(&reset_audit.rows, |r| r.n_max_delta);

    let single = {
        let mut c = capture.clone();
        c.photons = 1;
        c.problem().map_err(e)?
    };
    let ops = Operators::new(single.params.space().map_err(e)?);
    let traj = evolve_hierarchy(&single).map_err(e)?;
    let c11 = expectation(&ops.excited, &traj.final_state.component(1, 1)).map_err(e)?.re;
    let fit = small_alpha_oracle(&single, &DEFAULT_ALPHAS, &ops.excited).map_err(e)?;
    let oracle_gap = (fit.component(1) - c11).abs();

    let delta = mhz(5.0);
    let mut shifted = problem.clone();
    shifted.frame_resonator += delta;
    shifted.signal = shifted.signal.map(|s| s.with_detuning(s.carrier_detuning - delta));
    let a = evolve_hierarchy(&problem).map_err(e)?;
    let b = evolve_hierarchy(&shifted).map_err(e)?;
    let frame_gap = a
        .records
        .iter()
        .zip(&b.records)
        .flat_map(|(x, y)| (0..=2).map(move |k| (x.excitation[k] - y.excitation[k]).abs().max((x.photons[k] - y.photons[k]).abs())))
        .fold(0.0, f64::max);

    let ok = trace_err <= 1e-9
        && pairing
        && lowest >= -1e-7
        && cap_dt < 1e-4
        && reset_dt < 1e-4
        && cap_n < 1e-3
        && reset_n < 5e-3
        && oracle_gap <= 1e-3
        && frame_gap <= 1e-9;
    Ok((
        ok,
        format!(
            "trace {trace_err:.1e}, pairing {}, min eigenvalue {lowest:.1e}, dt/2 {cap_dt:.1e}/{reset_dt:.1e}, \
             n_max+1 {cap_n:.1e}/{reset_n:.1e} (capture/reset), oracle {oracle_gap:.1e}, frame shift {frame_gap:.1e}",
            if pairing { "exact" } else { "broken" }
        ),
    ))
}

fn main() {
    let verdicts = [
        criterion(1, "impedance match", 1.0, impedance_match),
        criterion(2, "decay-rate structure", 1.0, rate_structure),
        criterion(3, "reflection dips", 120.0, reflection_dips),
        criterion(4, "dark count", 10.0, dark_count),
        criterion(5, "detection efficiency", 60.0, efficiency),
        criterion(6, "pulse-length curve", 300.0, pulse_length_curve),
        criterion(7, "two-photon saturation", 600.0, two_photon_saturation),
        criterion(8, "reset", 150.0, reset),
        criterion(9, "property suite", 300.0, properties),
    ];
    let passed = verdicts.iter().filter(|v| v.pass).count();
    let failing: Vec<usize> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!("acceptance: {passed}/{} criteria pass; failing: {failing:?}; known red: {KNOWN_RED:?}", verdicts.len());
    for id in KNOWN_RED.iter().filter(|id| !failing.contains(id)) {
        println!("acceptance: criterion {id} is listed as known red but now passes");
    }
    let unexpected: Vec<usize> = failing.into_iter().filter(|id| !KNOWN_RED.contains(id)).collect();
    if !unexpected.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
