//! Time evolution of the coherent-expansion hierarchy.
//!
//! A weak coherent signal `α f_s(t)` turns the driven master equation into a
//! power series `ρ = Σ (α*)^m α^n ρ^{mn}`. Each component obeys
//!
//! ```text
//! dρ^{mn}/dt = −i[H(t), ρ^{mn}] + κ D[a]ρ^{mn} + γ D[σ]ρ^{mn}
//!              − i√κ' f_s(t)  [a†, ρ^{m(n−1)}]
//!              − i√κ' f_s*(t) [a,  ρ^{(m−1)n}]
//! ```
//!
//! with `H(t) = H_frame + (Ω(t) σ† + Ω*(t) σ) + √κ' Σ(f_cl a† + f_cl* a)`,
//! where `Ω(t) = √γ' f_d(t)` is the Rabi drive on the qubit.
//! Only components with `m ≤ n` are integrated; `ρ^{nm} = (ρ^{mn})†`.
//! Fock-state responses follow from
//! `ρ_1 = ρ^{00} + ρ^{11}` and `ρ_2 = ρ^{00} + 2ρ^{11} + 2ρ^{22}`.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::pulses::PulseEnvelope;
use crate::quantum::{
    apply_commutator, apply_lindblad_term, BasisState, DensityComponent, HilbertSpace, Operators, Qubit,
};
use crate::superop::{unvectorize, SuperOp};
use crate::system::{frame_hamiltonian, SystemParams};
use crate::C64;

/// Highest supported hierarchy order.
pub const MAX_ORDER: usize = 2;

/// Entries beyond this magnitude (or non-finite) are reported as divergence.
const BLOWUP: f64 = 1e6;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Everything that defines one integration run.
#[derive(Clone, Debug)]
pub struct HierarchyProblem {
    pub params: SystemParams,
    /// Single-photon wavefunction driving the hierarchy; `None` means no signal.
    pub signal: Option<PulseEnvelope>,
    /// Rabi drive `Ω(t) = √γ' f_d(t)` entering as `Ω σ† + h.c.`.
    /// See [`crate::pulses::rabi_envelope`].
    pub drive: Option<PulseEnvelope>,
    /// Classical resonator drives entering as `√κ'(f a† + h.c.)`.
    pub classical: Vec<PulseEnvelope>,
    /// Hierarchy order M: components up to ρ^{MM} are evolved.
    pub order: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub initial: BasisState,
    /// Resonator frame frequency (rad/ns); the qubit frame is always ω_d.
    pub frame_resonator: f64,
}

impl HierarchyProblem {
    pub fn new(params: SystemParams, t_start: f64, t_end: f64, frame_resonator: f64) -> Self {
        Self {
            params,
            signal: None,
            drive: None,
            classical: Vec::new(),
            order: 0,
            t_start,
            t_end,
            initial: BasisState::G0,
            frame_resonator,
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate_rates()?;
        if self.order > MAX_ORDER {
            return Err(invalid(format!("hierarchy order must be at most {MAX_ORDER}, got {}", self.order)));
        }
        if !(self.t_start < self.t_end) {
            return Err(invalid("t_start must precede t_end"));
        }
        if self.initial.photons > self.params.n_max {
            return Err(invalid("initial state above the Fock cutoff"));
        }
        Ok(())
    }
}

/// Time-independent and drive superoperators for one frame.
pub(crate) struct Generator {
    pub space: HilbertSpace,
    /// `−i[H_frame, ·] + κ D[a] + γ D[σ]`
    pub base: SuperOp,
    /// `−i[σ†, ·]`
    pub sigma_up: SuperOp,
    /// `−i[σ, ·]`
    pub sigma_down: SuperOp,
    /// `−i[a†, ·]`
    pub a_up: SuperOp,
    /// `−i[a, ·]`
    pub a_down: SuperOp,
    pub ops: Operators,
}

impl Generator {
    pub fn new(params: &SystemParams, frame_resonator: f64) -> Result<Self> {
        let space = params.space()?;
        let ops = Operators::new(space);
        let h = frame_hamiltonian(params, &ops, frame_resonator);
        let dim = space.dim();
        let base = SuperOp::from_map(dim, |rho| {
            let mut out = apply_commutator(&h, rho).expect("shape");
            out += apply_lindblad_term(&ops.a, params.kappa, rho).expect("shape");
            out += apply_lindblad_term(&ops.sigma, params.gamma, rho).expect("shape");
            out
        });
        let commutator = |op: &crate::quantum::OperatorMatrix| {
            let m = op.matrix().clone();
            SuperOp::from_map(dim, move |rho| (&m * rho - rho * &m) * C64::new(0.0, -1.0))
        };
        Ok(Self {
            space,
            base,
            sigma_up: commutator(&ops.sigma.dagger()),
            sigma_down: commutator(&ops.sigma),
            a_up: commutator(&ops.a.dagger()),
            a_down: commutator(&ops.a),
            ops,
        })
    }
}

/// Index of the stored component (m, n), m ≤ n.
fn slot(m: usize, n: usize) -> usize {
    debug_assert!(m <= n);
    n * (n + 1) / 2 + m
}

fn orders(order: usize) -> Vec<(usize, usize)> {
    (0..=order).flat_map(|n| (0..=n).map(move |m| (m, n))).collect()
}

/// Coefficients of ρ^{jj} in the Fock-state matrix for `k` photons.
fn fock_weights(k: usize) -> &'static [f64] {
    match k {
        0 => &[1.0],
        1 => &[1.0, 1.0],
        2 => &[1.0, 2.0, 2.0],
        _ => unreachable!("photon number above the supported order"),
    }
}

/// Snapshot of all stored components at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyState {
    pub space: HilbertSpace,
    pub order: usize,
    pub time: f64,
    /// Components with m ≤ n, ordered (0,0), (0,1), (1,1), (0,2), ...
    pub components: Vec<DensityComponent>,
}

impl HierarchyState {
    fn from_flat(space: HilbertSpace, order: usize, time: f64, x: &[C64]) -> Self {
        let d2 = space.dim() * space.dim();
        let components = orders(order)
            .into_iter()
            .map(|(m, n)| {
                let off = slot(m, n) * d2;
                DensityComponent { space, matrix: unvectorize(&x[off..off + d2], space.dim()), order: (m, n) }
            })
            .collect();
        Self { space, order, time, components }
    }

    /// ρ^{mn}; the conjugate of ρ^{nm} when m > n, zero beyond the order.
    pub fn component(&self, m: usize, n: usize) -> DMatrix<C64> {
        let d = self.space.dim();
        if m > self.order || n > self.order {
            return DMatrix::zeros(d, d);
        }
        if m <= n {
            self.components[slot(m, n)].matrix.clone()
        } else {
            self.components[slot(n, m)].matrix.adjoint()
        }
    }
}

/// Density matrix and expectation values for a `k`-photon Fock input.
#[derive(Clone, Debug, PartialEq)]
pub struct FockReconstruction {
    pub photons: usize,
    pub matrix: DMatrix<C64>,
    /// ⟨σ†σ⟩
    pub excitation: f64,
    /// ⟨a†a⟩
    pub photon_number: f64,
    /// ⟨a⟩
    pub field: C64,
}

pub fn reconstruct_fock(state: &HierarchyState, k: usize) -> Result<FockReconstruction> {
    if k > state.order {
        return Err(invalid(format!("{k}-photon response needs hierarchy order {k}, have {}", state.order)));
    }
    let d = state.space.dim();
    let mut matrix = DMatrix::<C64>::zeros(d, d);
    for (j, w) in fock_weights(k).iter().enumerate() {
        matrix += &state.components[slot(j, j)].matrix * C64::new(*w, 0.0);
    }
    let ops = Operators::new(state.space);
    let ev = |op: &crate::quantum::OperatorMatrix| crate::quantum::expectation(op, &matrix).expect("shape");
    Ok(FockReconstruction {
        photons: k,
        excitation: ev(&ops.excited).re,
        photon_number: ev(&ops.photon_number).re,
        field: ev(&ops.a),
        matrix,
    })
}

/// Expectation values recorded at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    /// p_k = ⟨σ†σ⟩ for a k-photon input, k ≤ order.
    pub excitation: [f64; MAX_ORDER + 1],
    /// ⟨a†a⟩ for a k-photon input.
    pub photons: [f64; MAX_ORDER + 1],
    /// ⟨a⟩ of ρ^{00}.
    pub field: C64,
    /// ⟨a⟩ of ρ^{01}, the amplitude linear in α.
    pub field_linear: C64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub order: usize,
    /// Uniform grid from t_start to t_end inclusive.
    pub times: Vec<f64>,
    pub records: Vec<Record>,
    pub final_state: HierarchyState,
}

impl Trajectory {
    /// p_k(t) over the whole grid.
    pub fn excitation(&self, k: usize) -> Vec<f64> {
        assert!(k <= self.order, "photon number above hierarchy order");
        self.records.iter().map(|r| r.excitation[k]).collect()
    }

    pub fn final_excitation(&self, k: usize) -> f64 {
        assert!(k <= self.order, "photon number above hierarchy order");
        self.records.last().expect("non-empty trajectory").excitation[k]
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Index of the grid point closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let h = self.step();
        (((t - self.times[0]) / h).round().max(0.0) as usize).min(self.times.len() - 1)
    }
}

/// Precomputed diagonal observables on the vectorized state.
struct Observables {
    dim: usize,
    excited: Vec<f64>,
    photons: Vec<f64>,
    /// (row, col, value) of the nonzero entries of `a`.
    a_entries: Vec<(usize, usize, f64)>,
}

impl Observables {
    fn new(space: HilbertSpace) -> Self {
        let dim = space.dim();
        let excited = (0..dim)
            .map(|i| if space.state(i).qubit == Qubit::Excited { 1.0 } else { 0.0 })
            .collect();
        let photons = (0..dim).map(|i| space.state(i).photons as f64).collect();
        let mut a_entries = Vec::new();
        for i in 0..dim {
            let s = space.state(i);
            if s.photons >= 1 {
                let lower = space.index(BasisState::new(s.qubit, s.photons - 1));
                a_entries.push((lower, i, (s.photons as f64).sqrt()));
            }
        }
        Self { dim, excited, photons, a_entries }
    }

    fn diag(&self, weights: &[f64], rho: &[C64]) -> f64 {
        (0..self.dim).map(|i| weights[i] * rho[i * self.dim + i].re).sum()
    }

    /// tr(a ρ) = Σ a_{rc} ρ_{cr}
    fn field(&self, rho: &[C64]) -> C64 {
        self.a_entries.iter().map(|&(r, c, v)| rho[c * self.dim + r] * v).sum()
    }
}

struct Integrator<'a> {
    problem: &'a HierarchyProblem,
    gen: Generator,
    sqrt_kappa_prime: f64,
    comps: Vec<(usize, usize)>,
    d2: usize,
    scratch: Vec<C64>,
}

impl<'a> Integrator<'a> {
    fn new(problem: &'a HierarchyProblem) -> Result<Self> {
        let gen = Generator::new(&problem.params, problem.frame_resonator)?;
        let d2 = gen.space.dim() * gen.space.dim();
        Ok(Self {
            problem,
            sqrt_kappa_prime: problem.params.kappa_prime.sqrt(),
            comps: orders(problem.order),
            d2,
            scratch: vec![ZERO; d2],
            gen,
        })
    }

    fn rhs(&mut self, t: f64, x: &[C64], out: &mut [C64]) {
        let p = self.problem;
        let drive = p.drive.as_ref().map_or(ZERO, |f| f.evaluate(t));
        let classical: C64 = p.classical.iter().map(|f| f.evaluate(t)).sum::<C64>() * self.sqrt_kappa_prime;
        let signal = p.signal.as_ref().map_or(ZERO, |f| f.evaluate(t) * self.sqrt_kappa_prime);
        let d2 = self.d2;
        let dim = self.gen.space.dim();
        out.iter_mut().for_each(|z| *z = ZERO);
        for &(m, n) in &self.comps {
            let off = slot(m, n) * d2;
            let (xc, oc) = (&x[off..off + d2], &mut out[off..off + d2]);
            self.gen.base.apply_add(ONE, xc, oc);
            self.gen.sigma_up.apply_add(drive, xc, oc);
            self.gen.sigma_down.apply_add(drive.conj(), xc, oc);
            self.gen.a_up.apply_add(classical, xc, oc);
            self.gen.a_down.apply_add(classical.conj(), xc, oc);
            if signal == ZERO {
                continue;
            }
            if n >= 1 {
                if m < n {
                    let src = slot(m, n - 1) * d2;
                    self.gen.a_up.apply_add(signal, &x[src..src + d2], oc);
                } else {
                    // ρ^{n(n−1)} = (ρ^{(n−1)n})†
                    let src = &x[slot(n - 1, n) * d2..][..d2];
                    for i in 0..dim {
                        for j in 0..dim {
                            self.scratch[i * dim + j] = src[j * dim + i].conj();
                        }
                    }
                    self.gen.a_up.apply_add(signal, &self.scratch, oc);
                }
            }
            if m >= 1 {
                let src = slot(m - 1, n) * d2;
                self.gen.a_down.apply_add(signal.conj(), &x[src..src + d2], oc);
            }
        }
    }
}

fn record(obs: &Observables, order: usize, d2: usize, x: &[C64]) -> Record {
    let mut excitation = [0.0; MAX_ORDER + 1];
    let mut photons = [0.0; MAX_ORDER + 1];
    let diag_exc: Vec<f64> = (0..=order).map(|j| obs.diag(&obs.excited, &x[slot(j, j) * d2..][..d2])).collect();
    let diag_n: Vec<f64> = (0..=order).map(|j| obs.diag(&obs.photons, &x[slot(j, j) * d2..][..d2])).collect();
    for k in 0..=order {
        let w = fock_weights(k);
        excitation[k] = w.iter().zip(&diag_exc).map(|(a, b)| a * b).sum();
        photons[k] = w.iter().zip(&diag_n).map(|(a, b)| a * b).sum();
    }
    let field_linear = if order >= 1 { obs.field(&x[slot(0, 1) * d2..][..d2]) } else { ZERO };
    Record { excitation, photons, field: obs.field(&x[..d2]), field_linear }
}

pub fn evolve_hierarchy(problem: &HierarchyProblem) -> Result<Trajectory> {
    evolve_hierarchy_with(problem, 0, |_| {})
}

/// Like [`evolve_hierarchy`], handing the full state to `observe` every
/// `stride` steps (and at the end). `stride = 0` disables observation.
pub fn evolve_hierarchy_with(
    problem: &HierarchyProblem,
    stride: usize,
    mut observe: impl FnMut(&HierarchyState),
) -> Result<Trajectory> {
    problem.validate()?;
    let mut integ = Integrator::new(problem)?;
    let space = integ.gen.space;
    let d2 = integ.d2;
    let order = problem.order;
    let n_comp = integ.comps.len();
    let obs = Observables::new(space);

    let span = problem.t_end - problem.t_start;
    let n_steps = (span / problem.params.dt).round().max(1.0) as usize;
    let h = span / n_steps as f64;

    let mut x = vec![ZERO; n_comp * d2];
    let i0 = space.index(problem.initial);
    x[i0 * space.dim() + i0] = ONE;

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut records = Vec::with_capacity(n_steps + 1);
    times.push(problem.t_start);
    records.push(record(&obs, order, d2, &x));
    if stride > 0 {
        observe(&HierarchyState::from_flat(space, order, problem.t_start, &x));
    }

    let len = x.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]);
    for step in 0..n_steps {
        let t = problem.t_start + step as f64 * h;
        integ.rhs(t, &x, &mut k1);
        axpy_into(&mut tmp, &x, 0.5 * h, &k1);
        integ.rhs(t + 0.5 * h, &tmp, &mut k2);
        axpy_into(&mut tmp, &x, 0.5 * h, &k2);
        integ.rhs(t + 0.5 * h, &tmp, &mut k3);
        axpy_into(&mut tmp, &x, h, &k3);
        integ.rhs(t + h, &tmp, &mut k4);
        let w = h / 6.0;
        for i in 0..len {
            x[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
        let t_next = problem.t_start + (step + 1) as f64 * h;
        if !x.iter().all(|z| z.norm_sqr() < BLOWUP * BLOWUP) {
            return Err(Error::Divergence { time: t_next });
        }
        times.push(t_next);
        records.push(record(&obs, order, d2, &x));
        if stride > 0 && ((step + 1) % stride == 0 || step + 1 == n_steps) {
            observe(&HierarchyState::from_flat(space, order, t_next, &x));
        }
    }
    let final_state = HierarchyState::from_flat(space, order, problem.t_end, &x);
    Ok(Trajectory { order, times, records, final_state })
}

/// `out = x + s·k`
#[inline]
fn axpy_into(out: &mut [C64], x: &[C64], s: f64, k: &[C64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(k) {
        *o = a + b * s;
    }
}
