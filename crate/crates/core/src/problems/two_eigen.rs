//! Rank-two quadratic with one large and one small eigenvalue, embedded in a
//! seeded random orthonormal frame so nothing is axis-aligned.

use crate::objective::{Batch, Objective};
use crate::rngutil;
use crate::vector::ParamVec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct TwoEigenQuadratic {
    lambda: f64,
    nu: f64,
    v_top: ParamVec,
    v_perp: ParamVec,
}

impl TwoEigenQuadratic {
    /// Requires `lambda > nu >= 0` and `dim >= 2`. The minimizer is the origin.
    pub fn new(lambda: f64, nu: f64, dim: usize, seed: u64) -> Self {
        assert!(lambda > nu && nu >= 0.0, "need lambda > nu >= 0");
        assert!(dim >= 2);
        let mut rng = rngutil::rng_from_seed(seed);
        let v_top = rngutil::unit_sphere(&mut rng, dim);
        let v_perp = loop {
            let mut v = rngutil::unit_sphere(&mut rng, dim);
            v.add_scaled(-v.dot(&v_top), &v_top);
            let n = v.norm();
            if n > 1e-8 {
                v.scale(1.0 / n);
                break v;
            }
        };
        TwoEigenQuadratic { lambda, nu, v_top, v_perp }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn v_top(&self) -> &ParamVec {
        &self.v_top
    }

    pub fn v_perp(&self) -> &ParamVec {
        &self.v_perp
    }

    /// Squared projections `(w'v_top)^2` and `(w'v_perp)^2`.
    pub fn energies(&self, w: &ParamVec) -> (f64, f64) {
        let p = w.dot(&self.v_top);
        let g = w.dot(&self.v_perp);
        (p * p, g * g)
    }

    /// A point with prescribed energies on the two eigendirections.
    pub fn point_with_energies(&self, p: f64, g: f64) -> ParamVec {
        assert!(p >= 0.0 && g >= 0.0);
        let mut w = ParamVec::zeros(self.v_top.len());
        w.add_scaled(p.sqrt(), &self.v_top);
        w.add_scaled(g.sqrt(), &self.v_perp);
        w
    }
}

impl Objective for TwoEigenQuadratic {
    fn dim(&self) -> usize {
        self.v_top.len()
    }

    fn value(&self, w: &ParamVec, _batch: Batch) -> f64 {
        let (p, g) = self.energies(w);
        0.5 * (self.lambda * p + self.nu * g)
    }

    fn gradient(&self, w: &ParamVec, _batch: Batch) -> ParamVec {
        let mut out = ParamVec::zeros(w.len());
        out.add_scaled(self.lambda * w.dot(&self.v_top), &self.v_top);
        out.add_scaled(self.nu * w.dot(&self.v_perp), &self.v_perp);
        out
    }

    fn quad_form(&self, _w: &ParamVec, u: &ParamVec, _batch: Batch) -> f64 {
        let a = u.dot(&self.v_top);
        let b = u.dot(&self.v_perp);
        self.lambda * a * a + self.nu * b * b
    }

    fn hess_vec(&self, _w: &ParamVec, v: &ParamVec, _batch: Batch) -> ParamVec {
        let mut out = ParamVec::zeros(v.len());
        out.add_scaled(self.lambda * v.dot(&self.v_top), &self.v_top);
        out.add_scaled(self.nu * v.dot(&self.v_perp), &self.v_perp);
        out
    }
}
