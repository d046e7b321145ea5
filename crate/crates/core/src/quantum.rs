//! Hilbert space of the qubit ⊗ resonator system and the dense operator
//! algebra used by everything else.
//!
//! Basis ordering: `index = q * (n_max + 1) + n` with `q = 0` for the ground
//! state `g`, `q = 1` for the excited state `e`, and `n` the resonator photon
//! number.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::C64;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    Ground,
    Excited,
}

impl Qubit {
    fn offset(self) -> usize {
        match self {
            Qubit::Ground => 0,
            Qubit::Excited => 1,
        }
    }
}

/// A product state `|q, n⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub qubit: Qubit,
    pub photons: usize,
}

impl BasisState {
    pub const G0: BasisState = BasisState { qubit: Qubit::Ground, photons: 0 };
    pub const E0: BasisState = BasisState { qubit: Qubit::Excited, photons: 0 };

    pub fn new(qubit: Qubit, photons: usize) -> Self {
        Self { qubit, photons }
    }
}

/// Truncated qubit ⊗ resonator space with Fock cutoff `n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n_max: usize,
}

impl HilbertSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn index(&self, state: BasisState) -> usize {
        assert!(state.photons <= self.n_max, "photon number above cutoff");
        state.qubit.offset() * (self.n_max + 1) + state.photons
    }

    pub fn state(&self, index: usize) -> BasisState {
        assert!(index < self.dim(), "basis index out of range");
        let qubit = if index > self.n_max { Qubit::Excited } else { Qubit::Ground };
        BasisState { qubit, photons: index % (self.n_max + 1) }
    }

    /// `|s⟩⟨s|` as a plain matrix.
    pub fn projector(&self, state: BasisState) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        let i = self.index(state);
        m[(i, i)] = C64::new(1.0, 0.0);
        m
    }
}

pub fn build_space(n_max: usize) -> Result<HilbertSpace> {
    HilbertSpace::new(n_max)
}

/// Dense operator on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    space: HilbertSpace,
    entries: DMatrix<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps `entries`; when `hermitian` is set the matrix must equal its
    /// adjoint to a relative tolerance of 1e-12.
    pub fn new(space: HilbertSpace, entries: DMatrix<C64>, hermitian: bool) -> Result<Self> {
        check_shape(&space, &entries)?;
        if hermitian && !is_hermitian(&entries, HERMITIAN_TOL) {
            return Err(invalid("operator flagged Hermitian is not Hermitian"));
        }
        Ok(Self { space, entries, hermitian })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        Self { space, entries: DMatrix::identity(space.dim(), space.dim()), hermitian: true }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        Self { space, entries: DMatrix::zeros(space.dim(), space.dim()), hermitian: true }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space, entries: self.entries.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { space: self.space, entries: &self.entries * C64::new(factor, 0.0), hermitian: self.hermitian }
    }

    /// Sum of two operators; Hermitian when both are.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space, "operators live on different spaces");
        Self {
            space: self.space,
            entries: &self.entries + &other.entries,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// Operator product `self · other`. The Hermitian flag is recomputed.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space, "operators live on different spaces");
        let entries = &self.entries * &other.entries;
        let hermitian = is_hermitian(&entries, HERMITIAN_TOL);
        Self { space: self.space, entries, hermitian }
    }
}

fn check_shape(space: &HilbertSpace, m: &DMatrix<C64>) -> Result<()> {
    let d = space.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(invalid(format!("expected {d}x{d} matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// `‖M − M†‖ ≤ tol · max(1, ‖M‖)` in the max-abs norm.
pub fn is_hermitian(m: &DMatrix<C64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol * scale))
}

/// Resonator annihilation `a = I ⊗ a_res` and qubit lowering
/// `σ = |g⟩⟨e| ⊗ I`.
pub fn embed_operators(space: HilbertSpace) -> (OperatorMatrix, OperatorMatrix) {
    let d = space.dim();
    let mut a = DMatrix::zeros(d, d);
    let mut sigma = DMatrix::zeros(d, d);
    for q in [Qubit::Ground, Qubit::Excited] {
        for n in 1..=space.n_max() {
            let row = space.index(BasisState::new(q, n - 1));
            let col = space.index(BasisState::new(q, n));
            a[(row, col)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    for n in 0..=space.n_max() {
        let row = space.index(BasisState::new(Qubit::Ground, n));
        let col = space.index(BasisState::new(Qubit::Excited, n));
        sigma[(row, col)] = C64::new(1.0, 0.0);
    }
    (
        OperatorMatrix { space, entries: a, hermitian: false },
        OperatorMatrix { space, entries: sigma, hermitian: false },
    )
}

/// Frequently used operators, built once per space.
#[derive(Clone, Debug)]
pub struct Operators {
    pub a: OperatorMatrix,
    pub sigma: OperatorMatrix,
    /// a†a
    pub photon_number: OperatorMatrix,
    /// σ†σ
    pub excited: OperatorMatrix,
    /// σσ†
    pub ground: OperatorMatrix,
}

impl Operators {
    pub fn new(space: HilbertSpace) -> Self {
        let (a, sigma) = embed_operators(space);
        let photon_number = a.dagger().compose(&a);
        let excited = sigma.dagger().compose(&sigma);
        let ground = sigma.compose(&sigma.dagger());
        Self { a, sigma, photon_number, excited, ground }
    }
}

/// `rate · (L ρ L† − ½ L†L ρ − ½ ρ L†L)`.
pub fn apply_lindblad_term(l: &OperatorMatrix, rate: f64, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_shape(&l.space, rho)?;
    let lm = &l.entries;
    let ld = lm.adjoint();
    let ldl = &ld * lm;
    let half = C64::new(0.5, 0.0);
    let out = lm * rho * &ld - (&ldl * rho) * half - (rho * &ldl) * half;
    Ok(out * C64::new(rate, 0.0))
}

/// `−i [H, ρ]`.
pub fn apply_commutator(h: &OperatorMatrix, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_shape(&h.space, rho)?;
    let hm = &h.entries;
    Ok((hm * rho - rho * hm) * C64::new(0.0, -1.0))
}

/// `tr(S ρ)`.
pub fn expectation(s: &OperatorMatrix, rho: &DMatrix<C64>) -> Result<C64> {
    check_shape(&s.space, rho)?;
    let d = rho.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += s.entries[(i, k)] * rho[(k, i)];
        }
    }
    Ok(acc)
}

/// One member `ρ^{mn}` of the coherent-expansion hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityComponent {
    pub space: HilbertSpace,
    pub matrix: DMatrix<C64>,
    pub order: (usize, usize),
}

impl DensityComponent {
    /// The partner component `ρ^{nm} = (ρ^{mn})†`.
    pub fn conjugate(&self) -> Self {
        Self { space: self.space, matrix: self.matrix.adjoint(), order: (self.order.1, self.order.0) }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}
