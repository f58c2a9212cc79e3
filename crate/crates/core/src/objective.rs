//! The objective-evaluation contract plus finite-difference oracles.
//!
//! Every problem exposes analytic value/gradient/curvature; the
//! finite-difference routines here exist so tests can check those analytic
//! paths against an independent computation.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::vector::ParamVec;

/// Optional mini-batch: indices into the problem's dataset. `None` means the
/// full objective.
pub type Batch<'a> = Option<&'a [usize]>;

/// Evaluation contract for a differentiable objective.
///
/// `quad_form(w, u)` must equal `u'∇²f(w)u` and `hess_vec(w, v)` must equal
/// `∇²f(w)v`; implementations provide both through analytic derivatives, not
/// numerical differencing.
pub trait Objective {
    /// Number of parameters.
    fn dim(&self) -> usize;

    /// Whether mini-batch evaluation is supported.
    fn batch_capable(&self) -> bool {
        false
    }

    /// Number of samples, for batch-capable objectives.
    fn num_samples(&self) -> usize {
        0
    }

    fn value(&self, w: &ParamVec, batch: Batch) -> f64;

    fn gradient(&self, w: &ParamVec, batch: Batch) -> ParamVec;

    /// Second directional derivative `u'∇²f(w)u`.
    fn quad_form(&self, w: &ParamVec, u: &ParamVec, batch: Batch) -> f64;

    /// Hessian-vector product `∇²f(w)v`.
    fn hess_vec(&self, w: &ParamVec, v: &ParamVec, batch: Batch) -> ParamVec;

    /// Fused value + gradient; override when one pass serves both.
    fn value_grad(&self, w: &ParamVec, batch: Batch) -> (f64, ParamVec) {
        (self.value(w, batch), self.gradient(w, batch))
    }
}

/// Step size used by the finite-difference oracles in tests:
/// `h = 1e-5 * (1 + ||w||)`.
pub fn fd_step(w: &ParamVec) -> f64 {
    1e-5 * (1.0 + w.norm())
}

/// Central-difference gradient, coordinate by coordinate.
pub fn fd_gradient(obj: &dyn Objective, w: &ParamVec, batch: Batch, h: f64) -> ParamVec {
    assert!(h > 0.0);
    let mut out = Vec::with_capacity(w.len());
    let mut probe = w.clone();
    for i in 0..w.len() {
        let wi = w[i];
        probe[i] = wi + h;
        let fp = obj.value(&probe, batch);
        probe[i] = wi - h;
        let fm = obj.value(&probe, batch);
        probe[i] = wi;
        out.push((fp - fm) / (2.0 * h));
    }
    ParamVec::new(out)
}

/// Central-difference quadratic form: `u'(∇f(w + hu) - ∇f(w - hu)) / (2h)`.
pub fn fd_quad_form(obj: &dyn Objective, w: &ParamVec, u: &ParamVec, batch: Batch, h: f64) -> f64 {
    assert!(h > 0.0);
    let gp = obj.gradient(&w.plus_scaled(h, u), batch);
    let gm = obj.gradient(&w.plus_scaled(-h, u), batch);
    u.dot(&gp.plus_scaled(-1.0, &gm)) / (2.0 * h)
}
