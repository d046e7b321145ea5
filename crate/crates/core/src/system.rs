//! Physical parameters, the driven Hamiltonian, and the dressed-state
//! spectrum of the lowest four levels.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::quantum::{HilbertSpace, OperatorMatrix, Operators};
use crate::units::{ghz, khz, mhz};
use crate::C64;

/// Rates and frequencies in rad/ns, `dt` in ns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega_q: f64,
    pub omega_r: f64,
    pub chi: f64,
    /// Total resonator decay rate.
    pub kappa: f64,
    /// Radiative resonator decay rate into the signal waveguide.
    pub kappa_prime: f64,
    /// Total qubit decay rate.
    pub gamma: f64,
    /// Radiative qubit decay rate into the drive waveguide.
    pub gamma_prime: f64,
    pub omega_d: f64,
    pub n_max: usize,
    pub dt: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference_device()
    }
}

impl SystemParams {
    /// Reference device: ω_q/2π = 5 GHz, ω_r/2π = 10 GHz, χ/2π = 40 MHz,
    /// κ/2π = κ'/2π = 20 MHz, γ/2π = 0.1 MHz, γ'/2π = 0.1 kHz and a drive
    /// 70 MHz below the qubit.
    pub fn reference_device() -> Self {
        Self {
            omega_q: ghz(5.0),
            omega_r: ghz(10.0),
            chi: mhz(40.0),
            kappa: mhz(20.0),
            kappa_prime: mhz(20.0),
            gamma: mhz(0.1),
            gamma_prime: khz(0.1),
            omega_d: ghz(5.0) - mhz(70.0),
            n_max: 2,
            dt: 0.02,
        }
    }

    /// Sets the total qubit decay rate, lowering γ' to γ when needed.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self.gamma_prime = self.gamma_prime.min(gamma);
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    /// Qubit-drive detuning ω_q − ω_d.
    pub fn drive_detuning(&self) -> f64 {
        self.omega_q - self.omega_d
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(self.n_max)
    }

    /// Rate bounds and the nesting window ω_q − 2χ < ω_d < ω_q.
    pub fn validate(&self) -> Result<()> {
        self.validate_rates()?;
        if !self.is_nested() {
            return Err(invalid("drive frequency outside the nesting window ω_q − 2χ < ω_d < ω_q"));
        }
        Ok(())
    }

    pub fn validate_rates(&self) -> Result<()> {
        let all = [
            self.omega_q,
            self.omega_r,
            self.chi,
            self.kappa,
            self.kappa_prime,
            self.gamma,
            self.gamma_prime,
            self.omega_d,
            self.dt,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite parameter"));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("kappa_prime", self.kappa_prime),
            ("gamma", self.gamma),
            ("gamma_prime", self.gamma_prime),
        ] {
            if v < 0.0 {
                return Err(invalid(format!("{name} must be non-negative")));
            }
        }
        if self.kappa_prime > self.kappa {
            return Err(invalid("kappa_prime exceeds kappa"));
        }
        if self.gamma_prime > self.gamma {
            return Err(invalid("gamma_prime exceeds gamma"));
        }
        if self.dt <= 0.0 {
            return Err(invalid("dt must be positive"));
        }
        if self.n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        Ok(())
    }

    pub fn is_nested(&self) -> bool {
        self.omega_q - 2.0 * self.chi < self.omega_d && self.omega_d < self.omega_q
    }
}

/// `ω_r a†a σσ† + [(ω_q − ω_d) + (ω_r − 2χ) a†a] σ†σ − ω_frame a†a`: the
/// undriven Hamiltonian with the qubit rotating at ω_d and the resonator at
/// `frame_resonator`.
pub fn frame_hamiltonian(params: &SystemParams, ops: &Operators, frame_resonator: f64) -> OperatorMatrix {
    let n = &ops.photon_number;
    let ground_part = n.compose(&ops.ground).scale(params.omega_r);
    let excited_part = ops.excited.scale(params.drive_detuning()).add(
        &n.compose(&ops.excited).scale(params.omega_r - 2.0 * params.chi),
    );
    ground_part.add(&excited_part).add(&n.scale(-frame_resonator))
}

/// Driven Hamiltonian in the frame rotating at ω_d on the qubit only:
/// `ω_r a†a σσ† + [(ω_q − ω_d) + (ω_r − 2χ) a†a] σ†σ + Ω_d (σ† + σ)`.
pub fn hamiltonian_driven(params: &SystemParams, omega_drive: f64) -> Result<OperatorMatrix> {
    let space = params.space()?;
    let ops = Operators::new(space);
    let x = ops.sigma.matrix() + ops.sigma.matrix().adjoint();
    let drive = OperatorMatrix::new(space, x * C64::new(omega_drive, 0.0), true)?;
    Ok(frame_hamiltonian(params, &ops, 0.0).add(&drive))
}

/// `½ · atan2(2·drive, detuning)`, continuous in `drive ≥ 0` and equal to
/// `½ · arctan(2·drive/detuning)` for positive detuning.
pub fn mixing_angle(drive_magnitude: f64, detuning: f64) -> f64 {
    0.5 * (2.0 * drive_magnitude).atan2(detuning)
}

/// Dressed levels |1̃⟩..|4̃⟩ of the n ≤ 1 manifold. Vectors are expressed in
/// the ordered basis `[|g,0⟩, |e,0⟩, |g,1⟩, |e,1⟩]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedSpectrum {
    pub drive_amplitude: f64,
    /// ω̃_1..ω̃_4, ascending within each photon-number manifold.
    pub energies: [f64; 4],
    pub vectors: [[f64; 4]; 4],
    /// Mixing angle of the n = 0 and n = 1 blocks.
    pub angles: [f64; 2],
    /// `rates[u − 3][j − 1] = κ̃_{uj}`.
    pub rates: [[f64; 2]; 2],
    /// Set for a block with zero gap and zero drive; its vectors fall back to
    /// the bare states.
    pub degenerate: [bool; 2],
}

impl DressedSpectrum {
    /// κ̃_ij for i ∈ {3, 4}, j ∈ {1, 2}.
    pub fn kappa(&self, i: usize, j: usize) -> f64 {
        assert!((3..=4).contains(&i) && (1..=2).contains(&j), "κ̃ is defined for i ∈ {{3,4}}, j ∈ {{1,2}}");
        self.rates[i - 3][j - 1]
    }

    /// ω̃_ij = ω̃_i − ω̃_j, levels numbered from 1.
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.energies[i - 1] - self.energies[j - 1]
    }
}

struct Block {
    lower: f64,
    upper: f64,
    angle: f64,
    /// (g, e) amplitudes.
    lower_vec: [f64; 2],
    upper_vec: [f64; 2],
    degenerate: bool,
}

/// Diagonalizes `[[e_g, Ω], [Ω, e_e]]`.
fn diagonalize_block(e_g: f64, e_e: f64, drive: f64) -> Block {
    let gap = e_e - e_g;
    let degenerate = gap == 0.0 && drive == 0.0;
    let theta = mixing_angle(drive, gap);
    let mean = 0.5 * (e_g + e_e);
    let half = (0.25 * gap * gap + drive * drive).sqrt();
    let (s, c) = theta.sin_cos();
    Block {
        lower: mean - half,
        upper: mean + half,
        angle: theta,
        lower_vec: fix_sign([c, -s]),
        upper_vec: fix_sign([s, c]),
        degenerate,
    }
}

/// The |g⟩ amplitude is made non-negative; if it vanishes, the |e⟩ one is.
fn fix_sign(v: [f64; 2]) -> [f64; 2] {
    let pivot = if v[0].abs() > 1e-15 { v[0] } else { v[1] };
    if pivot < 0.0 {
        [-v[0], -v[1]]
    } else {
        v
    }
}

pub fn dressed_spectrum(params: &SystemParams, omega_drive: f64) -> Result<DressedSpectrum> {
    params.validate()?;
    Ok(dressed_spectrum_unchecked(params, omega_drive))
}

fn dressed_spectrum_unchecked(params: &SystemParams, omega_drive: f64) -> DressedSpectrum {
    let det = params.drive_detuning();
    let b0 = diagonalize_block(0.0, det, omega_drive);
    let b1 = diagonalize_block(params.omega_r, det + params.omega_r - 2.0 * params.chi, omega_drive);
    let vectors = [
        [b0.lower_vec[0], b0.lower_vec[1], 0.0, 0.0],
        [b0.upper_vec[0], b0.upper_vec[1], 0.0, 0.0],
        [0.0, 0.0, b1.lower_vec[0], b1.lower_vec[1]],
        [0.0, 0.0, b1.upper_vec[0], b1.upper_vec[1]],
    ];
    // a† maps |q,0⟩ to |q,1⟩, so ⟨ũ|a†|j̃⟩ is the overlap of the (g, e) amplitudes.
    let rate = |u: &[f64; 2], j: &[f64; 2]| {
        let amp = u[0] * j[0] + u[1] * j[1];
        params.kappa_prime * amp * amp
    };
    let rates = [
        [rate(&b1.lower_vec, &b0.lower_vec), rate(&b1.lower_vec, &b0.upper_vec)],
        [rate(&b1.upper_vec, &b0.lower_vec), rate(&b1.upper_vec, &b0.upper_vec)],
    ];
    DressedSpectrum {
        drive_amplitude: omega_drive,
        energies: [b0.lower, b0.upper, b1.lower, b1.upper],
        vectors,
        angles: [b0.angle, b1.angle],
        rates,
        degenerate: [b0.degenerate, b1.degenerate],
    }
}

/// Bisection tolerance on Ω_d: 2π × 1 kHz.
pub fn match_tolerance() -> f64 {
    khz(1.0)
}

/// Smallest Ω_d > 0 in (0, 10|χ|] with κ̃_31 = κ̃_32.
pub fn find_impedance_match(params: &SystemParams) -> Result<f64> {
    if params.chi == 0.0 {
        return Err(Error::NoMatch("χ = 0: the two blocks mix identically".into()));
    }
    params.validate()?;
    let imbalance = |omega: f64| {
        let s = dressed_spectrum_unchecked(params, omega);
        s.kappa(3, 1) - s.kappa(3, 2)
    };
    let upper = 10.0 * params.chi.abs();
    // Locate the first sign change on a coarse grid, then bisect inside it.
    const SCAN: usize = 400;
    let mut lo = 0.0;
    let mut g_lo = imbalance(lo);
    let mut bracket = None;
    for k in 1..=SCAN {
        let hi = upper * k as f64 / SCAN as f64;
        let g_hi = imbalance(hi);
        if g_lo == 0.0 && lo > 0.0 {
            return Ok(lo);
        }
        if g_lo.signum() != g_hi.signum() {
            bracket = Some((lo, hi, g_lo));
            break;
        }
        lo = hi;
        g_lo = g_hi;
    }
    let (mut lo, mut hi, g_lo) = bracket.ok_or_else(|| {
        Error::NoMatch(format!("κ̃_31 − κ̃_32 does not change sign on (0, {upper:.6}] rad/ns"))
    })?;
    let tol = match_tolerance();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = imbalance(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Renormalized {
    pub omega_r: f64,
    pub omega_q: f64,
    pub chi: f64,
    /// `|ω̄_r − ω̄_q| ≥ 10 g`.
    pub dispersive: bool,
}

/// Dispersive renormalization of the bare Jaynes–Cummings frequencies:
/// `χ = g²/(ω̄_r − ω̄_q)`, `ω_r = ω̄_r + χ`, `ω_q = ω̄_q − χ`.
pub fn renormalized_frequencies(bare_omega_r: f64, bare_omega_q: f64, g: f64) -> Result<Renormalized> {
    let delta = bare_omega_r - bare_omega_q;
    if delta == 0.0 {
        return Err(invalid("bare resonator and qubit frequencies coincide"));
    }
    let dispersive = delta.abs() >= 10.0 * g.abs();
    if !dispersive {
        log::warn!("|ω̄_r − ω̄_q| / g = {:.3} is below 10; dispersive approximation is poor", delta.abs() / g.abs());
    }
    let chi = g * g / delta;
    Ok(Renormalized { omega_r: bare_omega_r + chi, omega_q: bare_omega_q - chi, chi, dispersive })
}

/// The n ≤ 1 block of [`hamiltonian_driven`] in the `[|g,0⟩, |e,0⟩, |g,1⟩, |e,1⟩]`
/// ordering.
pub fn low_manifold(h: &OperatorMatrix) -> DMatrix<C64> {
    let space = h.space();
    use crate::quantum::{BasisState, Qubit};
    let idx = [
        space.index(BasisState::new(Qubit::Ground, 0)),
        space.index(BasisState::new(Qubit::Excited, 0)),
        space.index(BasisState::new(Qubit::Ground, 1)),
        space.index(BasisState::new(Qubit::Excited, 1)),
    ];
    DMatrix::from_fn(4, 4, |i, j| h.matrix()[(idx[i], idx[j])])
}
