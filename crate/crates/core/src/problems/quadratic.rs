//! Exact quadratic objectives `f(w) = 1/2 (w - w*)' H (w - w*)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::objective::{Batch, Objective};
use crate::rngutil;
use crate::vector::ParamVec;

#[derive(Debug, Clone)]
pub enum HMatrix {
    Diag(Vec<f64>),
    /// Row-major dense symmetric matrix.
    Dense { n: usize, data: Vec<f64> },
}

impl HMatrix {
    pub fn dim(&self) -> usize {
        match self {
            HMatrix::Diag(d) => d.len(),
            HMatrix::Dense { n, .. } => *n,
        }
    }

    pub fn mat_vec(&self, v: &ParamVec) -> ParamVec {
        match self {
            HMatrix::Diag(d) => {
                ParamVec::new(d.iter().zip(v.iter()).map(|(h, x)| h * x).collect())
            }
            HMatrix::Dense { n, data } => {
                let mut out = vec![0.0; *n];
                for i in 0..*n {
                    let row = &data[i * n..(i + 1) * n];
                    out[i] = row.iter().zip(v.iter()).map(|(h, x)| h * x).sum();
                }
                ParamVec::new(out)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    h: HMatrix,
    w_star: ParamVec,
}

impl QuadraticProblem {
    pub fn new_diag(diag: Vec<f64>, w_star: ParamVec) -> Result<Self> {
        if diag.len() != w_star.len() {
            return Err(Error::DimensionMismatch { expected: diag.len(), actual: w_star.len() });
        }
        Ok(QuadraticProblem { h: HMatrix::Diag(diag), w_star })
    }

    /// Dense constructor; rejects matrices whose asymmetry exceeds
    /// `1e-12 * (1 + max |h_ij|)`.
    pub fn new_dense(n: usize, data: Vec<f64>, w_star: ParamVec) -> Result<Self> {
        assert_eq!(data.len(), n * n, "dense matrix shape mismatch");
        if w_star.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: w_star.len() });
        }
        let max_abs = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if asym > 1e-12 * (1.0 + max_abs) {
            return Err(Error::AsymmetricMatrix { max_asymmetry: asym });
        }
        Ok(QuadraticProblem { h: HMatrix::Dense { n, data }, w_star })
    }

    /// Seeded SPD quadratic: eigenvalues log-uniform in `[eig_min, eig_max]`,
    /// conjugated by a random orthogonal matrix, minimizer at the origin.
    pub fn random_spd(dim: usize, eig_min: f64, eig_max: f64, seed: u64) -> Self {
        assert!(dim >= 1 && eig_min > 0.0 && eig_max >= eig_min);
        let mut rng = rngutil::rng_from_seed(seed);
        let mut eigs = Vec::with_capacity(dim);
        for i in 0..dim {
            use rand::Rng;
            // Pin the extremes so the spectrum always spans the range.
            let e = if i == 0 {
                eig_max
            } else if i == 1 && dim > 1 {
                eig_min
            } else {
                let t: f64 = rng.gen();
                (eig_min.ln() + t * (eig_max.ln() - eig_min.ln())).exp()
            };
            eigs.push(e);
        }
        if dim == 1 {
            return QuadraticProblem { h: HMatrix::Diag(eigs), w_star: ParamVec::zeros(1) };
        }
        let q = random_orthogonal(&mut rng, dim);
        // H = Q diag(eigs) Q', then symmetrize away rounding.
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += q[i * dim + k] * eigs[k] * q[j * dim + k];
                }
                data[i * dim + j] = s;
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        QuadraticProblem { h: HMatrix::Dense { n: dim, data }, w_star: ParamVec::zeros(dim) }
    }

    pub fn matrix(&self) -> &HMatrix {
        &self.h
    }

    pub fn w_star(&self) -> &ParamVec {
        &self.w_star
    }

    fn centered(&self, w: &ParamVec) -> ParamVec {
        w.plus_scaled(-1.0, &self.w_star)
    }
}

/// Gram–Schmidt on a seeded Gaussian matrix; rows form the orthogonal basis.
fn random_orthogonal(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        loop {
            for j in 0..n {
                q[i * n + j] = rngutil::standard_normal(rng);
            }
            for k in 0..i {
                let dot: f64 = (0..n).map(|j| q[i * n + j] * q[k * n + j]).sum();
                for j in 0..n {
                    q[i * n + j] -= dot * q[k * n + j];
                }
            }
            let norm: f64 = (0..n).map(|j| q[i * n + j] * q[i * n + j]).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for j in 0..n {
                    q[i * n + j] /= norm;
                }
                break;
            }
        }
    }
    q
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn value(&self, w: &ParamVec, _batch: Batch) -> f64 {
        let c = self.centered(w);
        0.5 * c.dot(&self.h.mat_vec(&c))
    }

    fn gradient(&self, w: &ParamVec, _batch: Batch) -> ParamVec {
        self.h.mat_vec(&self.centered(w))
    }

    fn quad_form(&self, _w: &ParamVec, u: &ParamVec, _batch: Batch) -> f64 {
        u.dot(&self.h.mat_vec(u))
    }

    fn hess_vec(&self, _w: &ParamVec, v: &ParamVec, _batch: Batch) -> ParamVec {
        self.h.mat_vec(v)
    }
}
