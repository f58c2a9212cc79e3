//! Base optimizers producing the update direction consumed by the tuners.
//!
//! Hyperparameters other than the learning rate stay fixed at the usual
//! defaults; the step size itself always comes from a tuner or schedule.

use alloc::vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::vector::ParamVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Gd,
    Momentum,
    RmsProp,
    Adam,
}

impl OptimizerKind {
    pub fn is_preconditioned(self) -> bool {
        matches!(self, OptimizerKind::RmsProp | OptimizerKind::Adam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerHyper {
    pub beta1: f64,
    pub beta2: f64,
    /// For RMSProp this sits inside the square root (`u = -g / sqrt(nu + eps)`),
    /// for Adam outside (`u = -m_hat / (sqrt(nu_hat) + eps)`).
    pub eps: f64,
}

impl Default for OptimizerHyper {
    fn default() -> Self {
        OptimizerHyper { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Mutable optimizer state: first/second moment EMAs and a step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    hyper: OptimizerHyper,
    m: ParamVec,
    nu: ParamVec,
    t: u64,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, dim: usize, hyper: OptimizerHyper) -> Self {
        OptimizerState { kind, hyper, m: ParamVec::zeros(dim), nu: ParamVec::zeros(dim), t: 0 }
    }

    pub fn hyper(&self) -> OptimizerHyper {
        self.hyper
    }

    /// Compute the update direction `u_t` for the given gradient, advancing
    /// the internal moment estimates.
    ///
    /// gd: `u = -g`. momentum (heavy ball): `m' = beta1*m + g`, `u = -m'`.
    /// rmsprop: `nu' = (1-beta2)g^2 + beta2*nu`, `u = -g / sqrt(nu' + eps)`.
    /// adam: bias-corrected moments, `u = -m_hat / (sqrt(nu_hat) + eps)`.
    pub fn direction(&mut self, grad: &ParamVec) -> ParamVec {
        assert_eq!(grad.len(), self.m.len(), "direction: gradient dimension mismatch");
        self.t += 1;
        let h = self.hyper;
        match self.kind {
            OptimizerKind::Gd => grad.scaled(-1.0),
            OptimizerKind::Momentum => {
                for (m, g) in self.m.as_mut_slice().iter_mut().zip(grad.iter()) {
                    *m = h.beta1 * *m + g;
                }
                self.m.scaled(-1.0)
            }
            OptimizerKind::RmsProp => {
                for (nu, g) in self.nu.as_mut_slice().iter_mut().zip(grad.iter()) {
                    *nu = (1.0 - h.beta2) * g * g + h.beta2 * *nu;
                }
                let mut u = vec![0.0; grad.len()];
                for ((u, g), nu) in u.iter_mut().zip(grad.iter()).zip(self.nu.iter()) {
                    *u = -g / (nu + h.eps).sqrt();
                }
                ParamVec::new(u)
            }
            OptimizerKind::Adam => {
                for (m, g) in self.m.as_mut_slice().iter_mut().zip(grad.iter()) {
                    *m = (1.0 - h.beta1) * g + h.beta1 * *m;
                }
                for (nu, g) in self.nu.as_mut_slice().iter_mut().zip(grad.iter()) {
                    *nu = (1.0 - h.beta2) * g * g + h.beta2 * *nu;
                }
                let mc = 1.0 - h.beta1.powi(self.t as i32);
                let nc = 1.0 - h.beta2.powi(self.t as i32);
                let mut u = vec![0.0; grad.len()];
                for ((u, m), nu) in u.iter_mut().zip(self.m.iter()).zip(self.nu.iter()) {
                    let m_hat = m / mc;
                    let nu_hat = nu / nc;
                    *u = -m_hat / (nu_hat.sqrt() + h.eps);
                }
                ParamVec::new(u)
            }
        }
    }

    /// Diagonal of the preconditioner `P_t = diag(sqrt(nu_t + eps))`.
    ///
    /// Only meaningful for rmsprop/adam; calling it for gd/momentum is a
    /// contract violation and panics.
    pub fn preconditioner_diag(&self, eps: f64) -> ParamVec {
        assert!(
            self.kind.is_preconditioned(),
            "preconditioner_diag: optimizer {:?} has no preconditioner",
            self.kind
        );
        ParamVec::new(self.nu.iter().map(|nu| (nu + eps).sqrt()).collect())
    }

    pub fn second_moment(&self) -> &ParamVec {
        &self.nu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngutil;
    use rand::Rng;

    fn state(kind: OptimizerKind, dim: usize) -> OptimizerState {
        OptimizerState::new(kind, dim, OptimizerHyper::default())
    }

    #[test]
    fn gd_flips_sign() {
        let mut s = state(OptimizerKind::Gd, 2);
        let u = s.direction(&ParamVec::new(vec![2.0, -1.0]));
        assert_eq!(u.as_slice(), &[-2.0, 1.0]);
    }

    #[test]
    fn momentum_first_step_equals_gd() {
        let mut s = state(OptimizerKind::Momentum, 3);
        let g = ParamVec::new(vec![0.3, -1.5, 2.0]);
        let u = s.direction(&g);
        assert_eq!(u.as_slice(), g.scaled(-1.0).as_slice());
    }

    #[test]
    fn rmsprop_first_step_hand_arithmetic() {
        let mut s = state(OptimizerKind::RmsProp, 2);
        let u = s.direction(&ParamVec::new(vec![3.0, 0.0]));
        // nu' = (0.009, 0); u_0 = -3 / sqrt(0.009 + 1e-8)
        let expected = -3.0 / (0.009f64 + 1e-8).sqrt();
        assert!((u[0] - expected).abs() < 1e-12);
        assert!((u[0] + 31.6227).abs() < 1e-3, "{}", u[0]);
        assert_eq!(u[1], 0.0);
    }

    #[test]
    fn preconditioner_diag_hand_arithmetic() {
        let mut s = state(OptimizerKind::RmsProp, 2);
        let _ = s.direction(&ParamVec::new(vec![3.0, 0.0]));
        let p = s.preconditioner_diag(1e-8);
        assert!((p[0] - (0.009f64 + 1e-8).sqrt()).abs() < 1e-15);
        assert!((p[1] - 1e-4).abs() < 1e-18);

        let mut s = state(OptimizerKind::RmsProp, 2);
        s.nu = ParamVec::new(vec![4.0, 0.0]);
        let p = s.preconditioner_diag(0.0);
        assert_eq!(p.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    #[should_panic(expected = "no preconditioner")]
    fn preconditioner_diag_rejects_gd() {
        let s = state(OptimizerKind::Gd, 2);
        let _ = s.preconditioner_diag(1e-8);
    }

    #[test]
    fn first_step_directions_are_descent() {
        let mut rng = rngutil::rng_from_seed(5);
        for kind in [OptimizerKind::Gd, OptimizerKind::Momentum, OptimizerKind::RmsProp] {
            for _ in 0..20 {
                let g = ParamVec::new((0..6).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect());
                if g.norm() == 0.0 {
                    continue;
                }
                let mut s = state(kind, 6);
                let u = s.direction(&g);
                assert!(g.dot(&u) < 0.0, "{kind:?} not a descent direction");
            }
        }
    }

    #[test]
    fn beta1_zero_collapses_momentum_to_gd_and_adam_to_rmsprop() {
        let hyper0 = OptimizerHyper { beta1: 0.0, eps: 0.0, ..OptimizerHyper::default() };
        let mut mom = OptimizerState::new(OptimizerKind::Momentum, 4, hyper0);
        let mut gd = OptimizerState::new(OptimizerKind::Gd, 4, hyper0);
        let mut adam = OptimizerState::new(OptimizerKind::Adam, 4, hyper0);
        let mut rms = OptimizerState::new(OptimizerKind::RmsProp, 4, hyper0);
        let mut rng = rngutil::rng_from_seed(9);
        for t in 1..=25u64 {
            let g = ParamVec::new((0..4).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect());
            assert_eq!(mom.direction(&g).as_slice(), gd.direction(&g).as_slice());
            let ua = adam.direction(&g);
            let ur = rms.direction(&g);
            // Adam with beta1 = 0 is rmsprop plus second-moment bias correction.
            let corr = (1.0 - 0.999f64.powi(t as i32)).sqrt();
            for (a, r) in ua.iter().zip(ur.iter()) {
                assert!((a - r * corr).abs() <= 1e-12 * a.abs().max(1.0), "t={t}");
            }
        }
    }
}
