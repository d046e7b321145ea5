//! Sparse superoperators acting on row-major vectorized density matrices,
//! `vec(ρ)[i * dim + j] = ρ[i, j]`.

use nalgebra::DMatrix;

use crate::C64;

#[derive(Clone, Debug)]
pub(crate) struct SuperOp {
    dim: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl SuperOp {
    /// Tabulates a linear map by applying it to every matrix unit `E_kl`.
    pub fn from_map(dim: usize, map: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> Self {
        let mut triplets: Vec<(u32, u32, C64)> = Vec::new();
        for k in 0..dim {
            for l in 0..dim {
                let mut unit = DMatrix::zeros(dim, dim);
                unit[(k, l)] = C64::new(1.0, 0.0);
                let image = map(&unit);
                for i in 0..dim {
                    for j in 0..dim {
                        let v = image[(i, j)];
                        if v != C64::new(0.0, 0.0) {
                            triplets.push(((i * dim + j) as u32, (k * dim + l) as u32, v));
                        }
                    }
                }
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        Self {
            dim,
            rows: triplets.iter().map(|t| t.0).collect(),
            cols: triplets.iter().map(|t| t.1).collect(),
            vals: triplets.iter().map(|t| t.2).collect(),
        }
    }

    /// `out += coeff · S x`.
    #[inline]
    pub fn apply_add(&self, coeff: C64, x: &[C64], out: &mut [C64]) {
        if coeff == C64::new(0.0, 0.0) {
            return;
        }
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            out[r as usize] += coeff * v * x[c as usize];
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim * self.dim;
        let mut m = DMatrix::zeros(n, n);
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            m[(r as usize, c as usize)] += v;
        }
        m
    }
}

#[cfg(test)]
pub(crate) fn vectorize(m: &DMatrix<C64>) -> Vec<C64> {
    let d = m.nrows();
    (0..d * d).map(|k| m[(k / d, k % d)]).collect()
}

pub(crate) fn unvectorize(v: &[C64], dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| v[i * dim + j])
}
