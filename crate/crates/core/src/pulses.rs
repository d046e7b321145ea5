//! Complex time envelopes of the signal photon, the qubit drive and the
//! classical reset pulse.
//!
//! Gaussian factors are written in base 2, `2^{−x²}`, which equals
//! `exp(−x² ln 2)`; [`f64::exp2`] evaluates them directly so no rescaled
//! exponent is introduced.

use std::f64::consts::{LN_2, PI};

use crate::error::{invalid, Result};
use crate::C64;

/// Envelopes below this fraction of their peak are outside the support.
const SUPPORT_CUTOFF: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignalShape {
    Gaussian,
    Square,
    Exponential,
}

impl SignalShape {
    /// Drive plateau factor β used with this shape unless overridden.
    pub fn default_beta(self) -> f64 {
        match self {
            SignalShape::Gaussian => 2.0,
            SignalShape::Square => 1.0,
            SignalShape::Exponential => 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SignalShape::Gaussian => "gaussian",
            SignalShape::Square => "square",
            SignalShape::Exponential => "exponential",
        }
    }
}

impl std::str::FromStr for SignalShape {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SignalShape::Gaussian),
            "square" => Ok(SignalShape::Square),
            "exponential" => Ok(SignalShape::Exponential),
            other => Err(invalid(format!("unknown signal shape '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseShape {
    Signal(SignalShape),
    /// Square plateau of length βl with base-2 Gaussian shoulders of width w.
    FlatTopDrive,
    /// Gaussian reset pulse carrying ⟨n⟩ photons on average.
    ResetGaussian,
    /// Constant amplitude for all t.
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    /// Pulse length l (ns).
    pub length: f64,
    pub beta: f64,
    /// Shoulder width w (ns), flat-top drive only.
    pub width: f64,
    /// Carrier frequency minus the simulation frame frequency (rad/ns).
    pub carrier_detuning: f64,
    /// 1 for normalized signals, Ω_d/√γ' for the drive, √⟨n⟩ for reset.
    pub amplitude_scale: f64,
    /// Time window (ns) outside which the envelope is negligible.
    pub support: (f64, f64),
}

fn gaussian_norm(l: f64) -> f64 {
    (8.0 * LN_2 / (PI * l * l)).powf(0.25)
}

impl PulseEnvelope {
    /// Real, non-negative envelope magnitude |f(t)|.
    pub fn magnitude(&self, t: f64) -> f64 {
        let l = self.length;
        let unit = match self.shape {
            PulseShape::Signal(SignalShape::Gaussian) | PulseShape::ResetGaussian => {
                let x = t / (0.5 * l);
                gaussian_norm(l) * (-x * x).exp2()
            }
            PulseShape::Signal(SignalShape::Square) => {
                if t.abs() <= 0.5 * l {
                    1.0 / l.sqrt()
                } else {
                    0.0
                }
            }
            PulseShape::Signal(SignalShape::Exponential) => {
                if t >= -0.5 * self.beta * l {
                    (2.0 * LN_2 / l).sqrt() * (-(t / l + 0.5 * self.beta)).exp2()
                } else {
                    0.0
                }
            }
            PulseShape::FlatTopDrive => {
                let edge = 0.5 * self.beta * l;
                let over = t.abs() - edge;
                if over <= 0.0 {
                    1.0
                } else {
                    let x = over / (0.5 * self.width);
                    (-x * x).exp2()
                }
            }
            PulseShape::Continuous => 1.0,
        };
        self.amplitude_scale * unit
    }

    /// `|f(t)| · e^{−i δ t}` with δ the carrier detuning.
    pub fn evaluate(&self, t: f64) -> C64 {
        let m = self.magnitude(t);
        if m == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(m, -self.carrier_detuning * t)
    }

    pub fn with_scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.amplitude_scale *= factor;
        out
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        let mut out = self.clone();
        out.carrier_detuning = detuning;
        out
    }

    /// Trapezoid estimate of ∫|f|² dt over `[t0, t1]` with step `dt`.
    pub fn energy(&self, t0: f64, t1: f64, dt: f64) -> f64 {
        let n = ((t1 - t0) / dt).round().max(1.0) as usize;
        let h = (t1 - t0) / n as f64;
        let sq = |t: f64| self.magnitude(t).powi(2);
        let inner: f64 = (1..n).map(|k| sq(t0 + k as f64 * h)).sum();
        h * (inner + 0.5 * (sq(t0) + sq(t1)))
    }
}

/// Half-width (in units of the Gaussian half-length) where `2^{−x²}` drops
/// below the support cutoff.
fn gaussian_reach() -> f64 {
    (-SUPPORT_CUTOFF.log2()).sqrt()
}

/// Normalized single-photon wavefunction.
pub fn signal_envelope(shape: SignalShape, l: f64, beta: f64, detuning: f64) -> Result<PulseEnvelope> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(invalid("pulse length must be positive"));
    }
    if shape == SignalShape::Exponential && !(beta > 0.0) {
        return Err(invalid("beta must be positive"));
    }
    let support = match shape {
        SignalShape::Gaussian => {
            let r = 0.5 * l * gaussian_reach();
            (-r, r)
        }
        SignalShape::Square => (-0.5 * l, 0.5 * l),
        SignalShape::Exponential => {
            let start = -0.5 * beta * l;
            (start, start - l * SUPPORT_CUTOFF.log2())
        }
    };
    Ok(PulseEnvelope {
        shape: PulseShape::Signal(shape),
        length: l,
        beta,
        width: 0.0,
        carrier_detuning: detuning,
        amplitude_scale: 1.0,
        support,
    })
}

/// Qubit drive with plateau amplitude Ω_d/√γ', so that √γ'·|f_d| is the Rabi
/// drive Ω_d on the plateau.
pub fn drive_envelope(
    omega_drive: f64,
    l: f64,
    beta: f64,
    w: f64,
    detuning: f64,
    gamma_prime: f64,
) -> Result<PulseEnvelope> {
    if !(gamma_prime > 0.0) {
        return Err(invalid("gamma_prime must be positive to express the drive through the waveguide"));
    }
    Ok(rabi_envelope(omega_drive, l, beta, w, detuning)?.with_scale(1.0 / gamma_prime.sqrt()))
}

/// The same flat-top profile as [`drive_envelope`] scaled to the Rabi drive
/// √γ'·f_d, with plateau Ω_d.
pub fn rabi_envelope(omega_drive: f64, l: f64, beta: f64, w: f64, detuning: f64) -> Result<PulseEnvelope> {
    if !(w > 0.0) || !(beta > 0.0) || !(l > 0.0) {
        return Err(invalid("drive envelope needs positive l, beta and w"));
    }
    let reach = 0.5 * beta * l + 0.5 * w * gaussian_reach();
    Ok(PulseEnvelope {
        shape: PulseShape::FlatTopDrive,
        length: l,
        beta,
        width: w,
        carrier_detuning: detuning,
        amplitude_scale: omega_drive,
        support: (-reach, reach),
    })
}

/// Continuous qubit drive of Rabi frequency Ω_d.
pub fn continuous_drive(omega_drive: f64, gamma_prime: f64) -> Result<PulseEnvelope> {
    if !(gamma_prime > 0.0) {
        return Err(invalid("gamma_prime must be positive to express the drive through the waveguide"));
    }
    Ok(continuous(omega_drive / gamma_prime.sqrt(), 0.0))
}

/// Constant-amplitude tone.
pub fn continuous(amplitude: f64, detuning: f64) -> PulseEnvelope {
    PulseEnvelope {
        shape: PulseShape::Continuous,
        length: f64::INFINITY,
        beta: 0.0,
        width: 0.0,
        carrier_detuning: detuning,
        amplitude_scale: amplitude,
        support: (f64::NEG_INFINITY, f64::INFINITY),
    }
}

/// Classical Gaussian reset pulse with ∫|f_r|² dt = ⟨n⟩.
pub fn reset_envelope(n_mean: f64, l: f64, detuning: f64) -> Result<PulseEnvelope> {
    if !(n_mean >= 0.0) {
        return Err(invalid("mean photon number must be non-negative"));
    }
    if !(l > 0.0) {
        return Err(invalid("pulse length must be positive"));
    }
    let r = 0.5 * l * gaussian_reach();
    Ok(PulseEnvelope {
        shape: PulseShape::ResetGaussian,
        length: l,
        beta: 0.0,
        width: 0.0,
        carrier_detuning: detuning,
        amplitude_scale: n_mean.sqrt(),
        support: (-r, r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{khz, mhz};
    use proptest::prelude::*;

    /// Composite Simpson quadrature, independent of the trapezoid helper.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn gaussian_fwhm_is_length() {
        let f = signal_envelope(SignalShape::Gaussian, 100.0, 2.0, 0.0).unwrap();
        assert!((f.magnitude(50.0) / f.magnitude(0.0) - 0.5).abs() < 1e-15);
        assert!((f.magnitude(-50.0) / f.magnitude(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn square_profile() {
        let f = signal_envelope(SignalShape::Square, 80.0, 1.0, 0.0).unwrap();
        assert!((f.magnitude(0.0).powi(2) - 1.0 / 80.0).abs() < 1e-16);
        assert!((f.magnitude(40.0).powi(2) - 1.0 / 80.0).abs() < 1e-16);
        assert_eq!(f.magnitude(40.001), 0.0);
    }

    #[test]
    fn exponential_norm() {
        let l = 100.0;
        let f = signal_envelope(SignalShape::Exponential, l, 3.0, 0.0).unwrap();
        let start = -1.5 * l;
        let total = simpson(|t| f.magnitude(t).powi(2), start, start + 40.0 * l, 400_000);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        assert_eq!(f.magnitude(start - 1e-9), 0.0);
    }

    #[test]
    fn signals_are_normalized_on_the_grid() {
        for shape in [SignalShape::Gaussian, SignalShape::Square, SignalShape::Exponential] {
            for l in [20.0, 100.0, 300.0] {
                let beta = shape.default_beta();
                let f = signal_envelope(shape, l, beta, 0.0).unwrap();
                let (a, b) = f.support;
                let norm = f.energy(a, b, 0.02);
                // The square pulse has jumps, so the trapezoid rule is only
                // first-order accurate there.
                let tol = if shape == SignalShape::Square { 0.02 / l } else { 1e-6 };
                assert!((norm - 1.0).abs() < tol, "{shape:?} l={l}: {norm}");
            }
        }
    }

    #[test]
    fn drive_plateau_and_shoulder() {
        let omega = mhz(13.2);
        let gp = khz(0.1);
        let f = drive_envelope(omega, 100.0, 2.0, 30.0, 0.0, gp).unwrap();
        assert!((gp.sqrt() * f.magnitude(0.0) - omega).abs() < 1e-15);
        assert!((f.magnitude(100.0 + 15.0) / f.magnitude(0.0) - 0.5).abs() < 1e-14);
        assert!(f.magnitude(1e4) < 1e-300);
        assert!(f.magnitude(f.support.1) / f.magnitude(0.0) < 1.01e-8);
        // Continuous at the join.
        let eps = 1e-7;
        assert!((f.magnitude(100.0 + eps) - f.magnitude(100.0 - eps)).abs() < 1e-9 * f.magnitude(0.0));
    }

    #[test]
    fn reset_pulse_energy() {
        let zero = reset_envelope(0.0, 100.0, 0.0).unwrap();
        assert!((-500..=500).all(|k| zero.magnitude(k as f64) == 0.0));
        let f = reset_envelope(10.0, 100.0, 0.0).unwrap();
        let total = simpson(|t| f.magnitude(t).powi(2), -600.0, 600.0, 200_000);
        assert!((total - 10.0).abs() < 1e-5, "{total}");
        assert!(reset_envelope(-1.0, 100.0, 0.0).is_err());
    }

    #[test]
    fn argument_errors() {
        assert!(signal_envelope(SignalShape::Gaussian, 0.0, 2.0, 0.0).is_err());
        assert!(signal_envelope(SignalShape::Square, -3.0, 1.0, 0.0).is_err());
        assert!(drive_envelope(1.0, 100.0, 2.0, 0.0, 0.0, 1.0).is_err());
        assert!(drive_envelope(1.0, 100.0, 0.0, 30.0, 0.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn reset_scaling(n in 0.0f64..50.0, t in -300.0f64..300.0) {
            let a = reset_envelope(4.0 * n, 100.0, 0.3).unwrap().evaluate(t);
            let b = reset_envelope(n, 100.0, 0.3).unwrap().evaluate(t) * 2.0;
            prop_assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()));
        }

        #[test]
        fn even_envelopes(t in 0.0f64..400.0, l in 10.0f64..300.0) {
            let g = signal_envelope(SignalShape::Gaussian, l, 2.0, 0.0).unwrap();
            prop_assert_eq!(g.magnitude(t), g.magnitude(-t));
            let d = drive_envelope(1.0, l, 2.0, 30.0, 0.0, 1.0).unwrap();
            prop_assert_eq!(d.magnitude(t), d.magnitude(-t));
        }

        #[test]
        fn carrier_is_phase_only(t in -500.0f64..500.0, delta in -1.0f64..1.0) {
            for shape in [SignalShape::Gaussian, SignalShape::Square, SignalShape::Exponential] {
                let base = signal_envelope(shape, 100.0, shape.default_beta(), 0.2).unwrap();
                let shifted = base.with_detuning(0.2 + delta);
                let expected = base.evaluate(t) * C64::from_polar(1.0, -delta * t);
                prop_assert!((shifted.evaluate(t) - expected).norm() < 1e-12);
                prop_assert!((shifted.evaluate(t).norm() - base.evaluate(t).norm()).abs() < 1e-15);
            }
        }
    }
}
