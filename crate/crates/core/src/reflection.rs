//! Weak-field reflection coefficient of a continuous signal tone.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::Generator;
use crate::error::{Error, Result};
use crate::superop::unvectorize;
use crate::system::SystemParams;
use crate::C64;

/// Steady state of `L x = b` under the constraint `tr x = trace`, imposed by
/// replacing the (0,0) diagonal row of the generator.
fn constrained_solve(l: &DMatrix<C64>, dim: usize, mut rhs: DVector<C64>, trace: C64) -> Result<DVector<C64>> {
    let mut a = l.clone();
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    for i in 0..dim {
        a[(0, i * dim + i)] = C64::new(1.0, 0.0);
    }
    rhs[0] = trace;
    a.lu().solve(&rhs).ok_or_else(|| Error::Singular("steady-state generator".into()))
}

/// Stationary ρ^{00} under a constant drive Ω_d on the qubit, in the frame
/// rotating at `frame_resonator` on the resonator.
pub fn steady_state(params: &SystemParams, omega_drive: f64, frame_resonator: f64) -> Result<DMatrix<C64>> {
    params.validate_rates()?;
    let gen = Generator::new(params, frame_resonator)?;
    let dim = gen.space.dim();
    let l = liouvillian(&gen, omega_drive);
    let x = constrained_solve(&l, dim, DVector::zeros(dim * dim), C64::new(1.0, 0.0))?;
    Ok(unvectorize(x.as_slice(), dim))
}

fn liouvillian(gen: &Generator, omega_drive: f64) -> DMatrix<C64> {
    gen.base.to_dense() + (gen.sigma_up.to_dense() + gen.sigma_down.to_dense()) * C64::new(omega_drive, 0.0)
}

/// `r = 1 − i√κ' ⟨a⟩^{01} / f̄_s` for a unit-amplitude tone at ω_s.
///
/// The tone sets the resonator frame, so ρ^{01} is stationary there and
/// obeys `L ρ^{01} = i√κ' [a†, ρ^{00}]` with vanishing trace.
pub fn steady_reflection(params: &SystemParams, omega_drive: f64, omega_s: f64) -> Result<C64> {
    params.validate_rates()?;
    let gen = Generator::new(params, omega_s)?;
    let dim = gen.space.dim();
    let l = liouvillian(&gen, omega_drive);
    let rho00 = constrained_solve(&l, dim, DVector::zeros(dim * dim), C64::new(1.0, 0.0))?;

    let sk = params.kappa_prime.sqrt();
    let mut source = vec![C64::new(0.0, 0.0); dim * dim];
    gen.a_up.apply_add(C64::new(-sk, 0.0), rho00.as_slice(), &mut source);
    let rho01 = constrained_solve(&l, dim, DVector::from_vec(source), C64::new(0.0, 0.0))?;
    let rho01 = unvectorize(rho01.as_slice(), dim);
    let field = crate::quantum::expectation(&gen.ops.a, &rho01)?;
    Ok(C64::new(1.0, 0.0) - C64::new(0.0, sk) * field)
}

/// Reflection coefficient of the empty (undriven, qubit in |g⟩) resonator,
/// `1 − κ' / (κ/2 + i(ω_r − ω_s))`.
pub fn empty_cavity_reflection(params: &SystemParams, omega_s: f64) -> C64 {
    C64::new(1.0, 0.0) - params.kappa_prime / C64::new(params.kappa / 2.0, params.omega_r - omega_s)
}
