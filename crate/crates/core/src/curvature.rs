//! Sharpness estimation and edge-of-stability instrumentation.

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::rngutil;
use crate::vector::ParamVec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
pub struct PowerIterOpts {
    pub max_iters: usize,
    /// Stop when `|ray_k - ray_{k-1}| <= rel_tol * |ray_k|`.
    pub rel_tol: f64,
}

impl Default for PowerIterOpts {
    fn default() -> Self {
        PowerIterOpts { max_iters: 1000, rel_tol: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct SharpnessEstimate {
    /// Magnitude of the dominant eigenvalue, the quantity reported as sharpness.
    pub lambda_abs_max: f64,
    /// Signed Rayleigh quotient at the final iterate; kept for diagnostics
    /// since the magnitude alone hides negative dominant eigenvalues.
    pub rayleigh: f64,
    /// Unit-norm estimate of the dominant eigenvector.
    pub eigvec: ParamVec,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration with a seeded uniform-on-sphere start vector.
///
/// `matvec` must implement a symmetric operator; the estimate is the Rayleigh
/// quotient of the current iterate, reported in magnitude.
pub fn power_iteration<F>(
    matvec: F,
    dim: usize,
    opts: &PowerIterOpts,
    seed: u64,
) -> Result<SharpnessEstimate>
where
    F: Fn(&ParamVec) -> ParamVec,
{
    assert!(dim >= 1);
    let mut v = rngutil::unit_sphere(&mut rngutil::rng_from_seed(seed), dim);
    let mut rayleigh = 0.0;
    let mut prev: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=opts.max_iters {
        let hv = matvec(&v);
        assert_eq!(hv.len(), dim, "power_iteration: operator changed dimension");
        if !hv.is_finite() {
            return Err(Error::NonFiniteOperator { iteration: k });
        }
        rayleigh = v.dot(&hv);
        iterations = k;
        let norm = hv.norm();
        if norm == 0.0 {
            // Iterate landed in the null space; for a zero operator (linear
            // objective) this is the answer.
            return Ok(SharpnessEstimate {
                lambda_abs_max: 0.0,
                rayleigh: 0.0,
                eigvec: v,
                iterations,
                converged: true,
            });
        }
        v = hv.scaled(1.0 / norm);
        if let Some(p) = prev {
            if (rayleigh - p).abs() <= opts.rel_tol * rayleigh.abs() {
                converged = true;
                break;
            }
        }
        prev = Some(rayleigh);
    }
    Ok(SharpnessEstimate {
        lambda_abs_max: rayleigh.abs(),
        rayleigh,
        eigvec: v,
        iterations,
        converged,
    })
}

/// Sharpness of the full objective at `w`: power iteration over
/// `v -> ∇²f(w) v`.
pub fn sharpness(
    obj: &dyn Objective,
    w: &ParamVec,
    opts: &PowerIterOpts,
    seed: u64,
) -> Result<SharpnessEstimate> {
    power_iteration(|v| obj.hess_vec(w, v, None), obj.dim(), opts, seed)
}

/// Sharpness of the preconditioned Hessian `P^{-1/2} ∇²f(w) P^{-1/2}` for a
/// diagonal preconditioner `P = diag(precond_diag)`.
pub fn preconditioned_sharpness(
    obj: &dyn Objective,
    w: &ParamVec,
    precond_diag: &ParamVec,
    opts: &PowerIterOpts,
    seed: u64,
) -> Result<SharpnessEstimate> {
    assert_eq!(precond_diag.len(), obj.dim());
    for (i, &p) in precond_diag.iter().enumerate() {
        if !(p > 0.0) {
            return Err(Error::NonPositivePreconditioner { index: i, value: p });
        }
    }
    let inv_sqrt: ParamVec =
        ParamVec::new(precond_diag.iter().map(|p| 1.0 / p.sqrt()).collect());
    let dim = obj.dim();
    power_iteration(
        |v| {
            let mut scaled = v.clone();
            for (s, i) in scaled.as_mut_slice().iter_mut().zip(inv_sqrt.iter()) {
                *s *= i;
            }
            let mut hv = obj.hess_vec(w, &scaled, None);
            for (h, i) in hv.as_mut_slice().iter_mut().zip(inv_sqrt.iter()) {
                *h *= i;
            }
            hv
        },
        dim,
        opts,
        seed,
    )
}

/// Normalized sharpness `y = eta * lambda - 2`; `y = 0` is the edge of
/// stability.
pub fn normalized_sharpness(eta: f64, lambda: f64) -> f64 {
    eta * lambda - 2.0
}

/// `|cos|` between a direction and an eigenvector (sign of an eigenvector is
/// arbitrary). Returns 0 for zero vectors.
pub fn alignment(u: &ParamVec, v: &ParamVec) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (u.dot(v) / (nu * nv)).abs()
}

/// Signed cosine between successive updates. Returns 0 for zero vectors.
pub fn update_angle(u_t: &ParamVec, u_prev: &ParamVec) -> f64 {
    let nt = u_t.norm();
    let np = u_prev.norm();
    if nt == 0.0 || np == 0.0 {
        return 0.0;
    }
    u_t.dot(u_prev) / (nt * np)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn diag_op(d: Vec<f64>) -> impl Fn(&ParamVec) -> ParamVec {
        move |v: &ParamVec| ParamVec::new(d.iter().zip(v.iter()).map(|(a, b)| a * b).collect())
    }

    #[test]
    fn dominant_diagonal() {
        let est = power_iteration(diag_op(vec![3.0, 1.0]), 2, &PowerIterOpts::default(), 0).unwrap();
        assert!((est.lambda_abs_max - 3.0).abs() < 3e-3);
        assert!(est.converged);
        assert!((est.eigvec.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reports_magnitude_for_negative_dominant_eigenvalue() {
        let est =
            power_iteration(diag_op(vec![-5.0, 1.0]), 2, &PowerIterOpts::default(), 1).unwrap();
        assert!((est.lambda_abs_max - 5.0).abs() < 5e-3);
        assert!(est.rayleigh < 0.0);
    }

    #[test]
    fn zero_operator_converges_to_zero() {
        let est = power_iteration(diag_op(vec![0.0, 0.0, 0.0]), 3, &PowerIterOpts::default(), 2)
            .unwrap();
        assert_eq!(est.lambda_abs_max, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn non_finite_operator_is_an_error() {
        let res = power_iteration(|_| ParamVec::new(vec![f64::NAN, 0.0]), 2, &PowerIterOpts::default(), 0);
        assert!(matches!(res, Err(Error::NonFiniteOperator { .. })));
    }

    #[test]
    fn scale_equivariant_with_same_seed() {
        let base = vec![2.0, -1.5, 0.4, 1.1, -0.2];
        for k in [2.0, 0.25, 3.7, 10.0] {
            let scaled: Vec<f64> = base.iter().map(|x| x * k).collect();
            let opts = PowerIterOpts::default();
            let a = power_iteration(diag_op(base.clone()), 5, &opts, 7).unwrap();
            let b = power_iteration(diag_op(scaled), 5, &opts, 7).unwrap();
            assert!(
                (b.lambda_abs_max - k * a.lambda_abs_max).abs() <= 1e-12 * b.lambda_abs_max,
                "k={k}: {} vs {}",
                b.lambda_abs_max,
                k * a.lambda_abs_max
            );
        }
    }

    #[test]
    fn preconditioner_identity_matches_plain_and_rejects_nonpositive() {
        use crate::problems::QuadraticProblem;
        let prob = QuadraticProblem::new_diag(vec![4.0, 1.0], ParamVec::zeros(2)).unwrap();
        let w = ParamVec::new(vec![0.3, -0.8]);
        let opts = PowerIterOpts::default();
        let plain = sharpness(&prob, &w, &opts, 3).unwrap();
        let ident = preconditioned_sharpness(&prob, &w, &ParamVec::new(vec![1.0, 1.0]), &opts, 3)
            .unwrap();
        assert!((plain.lambda_abs_max - ident.lambda_abs_max).abs() < 1e-12);

        let bad = preconditioned_sharpness(&prob, &w, &ParamVec::new(vec![1.0, 0.0]), &opts, 3);
        assert!(matches!(bad, Err(Error::NonPositivePreconditioner { index: 1, .. })));
    }

    #[test]
    fn preconditioner_divides_out_curvature() {
        use crate::problems::QuadraticProblem;
        let prob = QuadraticProblem::new_diag(vec![4.0, 1.0], ParamVec::zeros(2)).unwrap();
        let w = ParamVec::zeros(2);
        let opts = PowerIterOpts::default();
        // H = diag(4, 1), P = diag(4, 1): preconditioned Hessian is identity.
        let est = preconditioned_sharpness(&prob, &w, &ParamVec::new(vec![4.0, 1.0]), &opts, 5)
            .unwrap();
        assert!((est.lambda_abs_max - 1.0).abs() < 1e-3);
        // P = diag(16, 1): max(4/16, 1) = 1.
        let est = preconditioned_sharpness(&prob, &w, &ParamVec::new(vec![16.0, 1.0]), &opts, 5)
            .unwrap();
        assert!((est.lambda_abs_max - 1.0).abs() < 1e-3);
    }

    #[test]
    fn constant_preconditioner_scales_estimate() {
        use crate::problems::QuadraticProblem;
        let prob =
            QuadraticProblem::new_diag(vec![2.0, 0.5, 1.0], ParamVec::zeros(3)).unwrap();
        let w = ParamVec::zeros(3);
        let opts = PowerIterOpts::default();
        let c = 4.0;
        let plain = sharpness(&prob, &w, &opts, 11).unwrap();
        let pre = preconditioned_sharpness(
            &prob,
            &w,
            &ParamVec::new(vec![c, c, c]),
            &opts,
            11,
        )
        .unwrap();
        assert!((pre.lambda_abs_max - plain.lambda_abs_max / c).abs() <= 1e-10 * plain.lambda_abs_max);
    }

    #[test]
    fn normalized_sharpness_values() {
        assert_eq!(normalized_sharpness(1.0, 2.0), 0.0);
        assert!((normalized_sharpness(0.9, 2.0) + 0.2).abs() < 1e-15);
        for lambda in [0.5, 2.0, 37.0] {
            let eps = 0.05;
            let eta = 2.0 * (1.0 - eps) / lambda;
            assert!((normalized_sharpness(eta, lambda) + 2.0 * eps).abs() < 1e-12);
        }
    }

    #[test]
    fn alignment_and_update_angle() {
        let u = ParamVec::new(vec![1.0, 1.0]);
        let v = ParamVec::new(vec![1.0, 1.0]);
        let o = ParamVec::new(vec![1.0, -1.0]);
        assert!((alignment(&u, &v) - 1.0).abs() < 1e-15);
        assert!(alignment(&u, &o).abs() < 1e-15);
        assert!((alignment(&u, &v.scaled(-1.0)) - 1.0).abs() < 1e-15);
        assert!((update_angle(&u, &v) - 1.0).abs() < 1e-15);
        assert!((update_angle(&u, &v.scaled(-1.0)) + 1.0).abs() < 1e-15);
        assert!(update_angle(&u, &o).abs() < 1e-15);
        assert_eq!(alignment(&u, &ParamVec::zeros(2)), 0.0);
        assert_eq!(update_angle(&ParamVec::zeros(2), &u), 0.0);
    }
}
