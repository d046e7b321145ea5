//! Brute-force check of the hierarchy: the full master equation with a weak
//! coherent signal `α f_s(t)` entering as a classical resonator drive,
//! integrated with dense matrices and fitted in powers of `α²`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::HierarchyProblem;
use crate::error::{invalid, Error, Result};
use crate::quantum::{apply_lindblad_term, expectation, OperatorMatrix, Operators};
use crate::system::frame_hamiltonian;
use crate::C64;

/// Default coherent amplitudes.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.1, 0.15, 0.2];

/// `⟨S⟩(α) ≈ c0 + c1 α² + c2 α⁴`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleFit {
    pub alphas: Vec<f64>,
    pub samples: Vec<f64>,
    pub coefficients: [f64; 3],
}

impl OracleFit {
    /// ⟨S⟩^{kk} for k = 0, 1, 2.
    pub fn component(&self, k: usize) -> f64 {
        self.coefficients[k]
    }
}

/// Density matrix at `problem.t_end` of the full master equation with the
/// signal scaled by `alpha` and added to the classical resonator drives.
/// `problem.order` is ignored.
pub fn full_master_equation(problem: &HierarchyProblem, alpha: f64) -> Result<DMatrix<C64>> {
    problem.params.validate_rates()?;
    if !(problem.t_start < problem.t_end) {
        return Err(invalid("t_start must precede t_end"));
    }
    let space = problem.params.space()?;
    let ops = Operators::new(space);
    let h0 = frame_hamiltonian(&problem.params, &ops, problem.frame_resonator);
    let sk = problem.params.kappa_prime.sqrt();
    let (sigma, a) = (ops.sigma.matrix().clone(), ops.a.matrix().clone());
    let (sigma_dag, a_dag) = (sigma.adjoint(), a.adjoint());

    let rhs = |t: f64, rho: &DMatrix<C64>| -> DMatrix<C64> {
        let fd = problem.drive.as_ref().map_or(C64::new(0.0, 0.0), |f| f.evaluate(t));
        let mut fc: C64 = problem.classical.iter().map(|f| f.evaluate(t)).sum();
        if let Some(s) = &problem.signal {
            fc += s.evaluate(t) * alpha;
        }
        let fc = fc * sk;
        let h = h0.matrix() + &sigma_dag * fd + &sigma * fd.conj() + &a_dag * fc + &a * fc.conj();
        let mut out = (&h * rho - rho * &h) * C64::new(0.0, -1.0);
        out += apply_lindblad_term(&ops.a, problem.params.kappa, rho).expect("shape");
        out += apply_lindblad_term(&ops.sigma, problem.params.gamma, rho).expect("shape");
        out
    };

    let span = problem.t_end - problem.t_start;
    let n = (span / problem.params.dt).round().max(1.0) as usize;
    let h = span / n as f64;
    let mut rho = space.projector(problem.initial);
    for step in 0..n {
        let t = problem.t_start + step as f64 * h;
        let k1 = rhs(t, &rho);
        let k2 = rhs(t + 0.5 * h, &(&rho + &k1 * C64::new(0.5 * h, 0.0)));
        let k3 = rhs(t + 0.5 * h, &(&rho + &k2 * C64::new(0.5 * h, 0.0)));
        let k4 = rhs(t + h, &(&rho + &k3 * C64::new(h, 0.0)));
        rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence { time: t + h });
        }
    }
    Ok(rho)
}

/// Extracts ⟨S⟩^{00}, ⟨S⟩^{11}, ⟨S⟩^{22} at `problem.t_end` by least-squares
/// fitting `Re⟨S⟩(α)` over at least three distinct amplitudes.
pub fn small_alpha_oracle(problem: &HierarchyProblem, alphas: &[f64], observable: &OperatorMatrix) -> Result<OracleFit> {
    let mut distinct: Vec<f64> = alphas.iter().map(|a| a.abs()).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(invalid("the oracle needs at least three distinct amplitudes"));
    }
    let samples = alphas
        .iter()
        .map(|&a| {
            let rho = full_master_equation(problem, a)?;
            Ok(expectation(observable, &rho)?.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let design = DMatrix::from_fn(alphas.len(), 3, |i, j| alphas[i].powi(2 * j as i32));
    let c = design
        .svd(true, true)
        .solve(&DVector::from_column_slice(&samples), 1e-14)
        .map_err(|e| Error::Singular(e.to_string()))?;
    Ok(OracleFit { alphas: alphas.to_vec(), samples, coefficients: [c[0], c[1], c[2]] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::BasisState;
    use crate::system::SystemParams;

    #[test]
    fn needs_three_amplitudes() {
        let p = HierarchyProblem::new(SystemParams::reference_device(), 0.0, 1.0, 0.0);
        let ops = Operators::new(p.params.space().unwrap());
        assert!(small_alpha_oracle(&p, &[0.1, 0.2, -0.2], &ops.excited).is_err());
    }

    #[test]
    fn no_signal_gives_flat_fit() {
        let mut p = HierarchyProblem::new(SystemParams::reference_device(), 0.0, 50.0, 0.0);
        p.initial = BasisState::E0;
        let ops = Operators::new(p.params.space().unwrap());
        let fit = small_alpha_oracle(&p, &DEFAULT_ALPHAS, &ops.excited).unwrap();
        let exact = (-p.params.gamma * 50.0).exp();
        assert!((fit.component(0) - exact).abs() < 1e-10);
        assert!(fit.component(1).abs() < 1e-8);
        assert!(fit.component(2).abs() < 1e-6);
    }
}
