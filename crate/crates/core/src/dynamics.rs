//! Simplified models of the joint step-size/curvature dynamics.
//!
//! Three discrete systems: gradient descent projected on the top Hessian
//! eigendirection with a constant step (`ConstEta`), the same system driven at
//! a fixed normalized sharpness `y` (`FixedY`, the idealized line-search
//! regime), and a two-eigenvalue model of the curvature-ratio tuner
//! (`CdatModel`).

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Shared model constants: `a` is the instantaneous sharpness change along the
/// negative gradient, `b` the strength of the nonlinear feedback, `nu` the
/// small eigenvalue and `sigma` the tuner scale (both used by the CdatModel
/// only).
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64) -> Self {
        ModelParams { a, b, nu: 0.0, sigma: 2.0 }
    }
}

/// Projection on the top eigendirection and the top eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XLambdaState {
    pub x: f64,
    pub lambda: f64,
}

/// Squared projection, normalized sharpness, and the current step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PYState {
    pub p: f64,
    pub y: f64,
    pub eta: f64,
}

/// Two-eigenvalue tuner model state: energy on the top eigendirection (`p`),
/// on the orthogonal one (`g`), the top eigenvalue and the step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdatModelState {
    pub p: f64,
    pub g: f64,
    pub lambda: f64,
    pub eta: f64,
}

/// One step of the projected system, both updates from time-t values:
/// `x' = (1 - eta*lambda) x`, `lambda' = eta (a - b x^2) + lambda`.
///
/// Around the period-2 edge orbit (`x^2 = a/b`, `lambda = 2/eta`) this
/// simultaneous form has linearization eigenvalues `1 ± i eta sqrt(2a)` of
/// modulus `sqrt(1 + 2a eta^2) > 1`: oscillations grow by ~`exp(a t)` and
/// every orbit eventually blows up. See [`step_x_lambda_advanced`] for the
/// area-preserving variant.
pub fn step_x_lambda(s: &XLambdaState, eta: f64, prm: &ModelParams) -> XLambdaState {
    XLambdaState {
        x: (1.0 - eta * s.lambda) * s.x,
        lambda: eta * (prm.a - prm.b * s.x * s.x) + s.lambda,
    }
}

/// Projected-system step with the eigenvalue update fed by the already
/// advanced projection (`lambda' = eta (a - b x'^2) + lambda`).
///
/// This is the natural in-place sequential update; its linearization around
/// the edge orbit has determinant 1, so oscillations neither grow nor decay
/// and the edge-of-stability band behavior is actually observable. The
/// constant-step simulator uses it by default.
pub fn step_x_lambda_advanced(s: &XLambdaState, eta: f64, prm: &ModelParams) -> XLambdaState {
    let x = (1.0 - eta * s.lambda) * s.x;
    XLambdaState { x, lambda: eta * (prm.a - prm.b * x * x) + s.lambda }
}

/// One step of the normalized system, given the next step size:
/// `p' = (1+y)^2 p`,
/// `y' = eta_next [eta (a - b p)] + (eta_next/eta) y + 2 (eta_next/eta - 1)`.
pub fn step_p_y(s: &PYState, eta_next: f64, prm: &ModelParams) -> PYState {
    let one_plus_y = 1.0 + s.y;
    let ratio = eta_next / s.eta;
    PYState {
        p: one_plus_y * one_plus_y * s.p,
        y: eta_next * (s.eta * (prm.a - prm.b * s.p)) + ratio * s.y + 2.0 * (ratio - 1.0),
        eta: eta_next,
    }
}

/// Fixed-undershoot schedule `eta = 2 (1 - eps) / lambda`, which pins the
/// normalized sharpness at `y = -2 eps`.
pub fn ls_model_eta(lambda: f64, eps: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::NonPositiveSharpness { lambda });
    }
    Ok(2.0 * (1.0 - eps) / lambda)
}

/// Tuner step of the two-eigenvalue model:
/// `eta = sigma (lambda^2 p + nu^2 g) / (lambda^3 p + nu^3 g)`.
pub fn cdat_model_eta(lambda: f64, p: f64, g: f64, nu: f64, sigma: f64) -> f64 {
    let num = lambda * lambda * p + nu * nu * g;
    let den = lambda * lambda * lambda * p + nu * nu * nu * g;
    sigma * num / den
}

/// One step of the two-eigenvalue tuner model. With `stale_eta = false`
/// (default) the energies and the eigenvalue advance first and the next step
/// size is computed from the advanced state; `stale_eta = true` computes it
/// from the pre-step state instead.
pub fn step_cdat_model(s: &CdatModelState, prm: &ModelParams, stale_eta: bool) -> CdatModelState {
    let y = s.eta * s.lambda - 2.0;
    let one_plus_y = 1.0 + y;
    let shrink = 1.0 - s.eta * prm.nu;
    let p_next = one_plus_y * one_plus_y * s.p;
    let g_next = shrink * shrink * s.g;
    let lambda_next = s.eta * (prm.a - prm.b * s.p) + s.lambda;
    let eta_next = if stale_eta {
        cdat_model_eta(s.lambda, s.p, s.g, prm.nu, prm.sigma)
    } else {
        cdat_model_eta(lambda_next, p_next, g_next, prm.nu, prm.sigma)
    };
    CdatModelState { p: p_next, g: g_next, lambda: lambda_next, eta: eta_next }
}

#[derive(Debug, Clone, Copy)]
pub enum DynamicsModel {
    /// Constant step size. The default init (`x0 = 1`, `lambda0 = 1.9`)
    /// starts below the edge with a moderate oscillation amplitude; note
    /// `lambda0 = 1/eta` is degenerate (it zeroes the projection in one step
    /// and removes the feedback entirely), and far-below-edge starts carry so
    /// much oscillation energy that the trajectory leaves the edge band or
    /// blows up. `stale_feedback` switches the eigenvalue update back to the
    /// simultaneous form, whose orbits all diverge slowly (see
    /// [`step_x_lambda`]).
    ConstEta { x0: f64, lambda0: f64, eta: f64, stale_feedback: bool },
    /// Step size recomputed from the current eigenvalue so that
    /// `y = eta*lambda - 2` equals `y_target` at every step.
    /// `lambda0` is implied: `(2 + y_target) / eta0`.
    FixedY { x0: f64, eta0: f64, y_target: f64 },
    /// Two-eigenvalue tuner model.
    CdatModel { p0: f64, g0: f64, lambda0: f64, eta0: f64, stale_eta: bool },
}

/// One simulated trace row. `x_or_p` holds the projection `x` for the
/// projected models and the energy `p` for the tuner model; `g` is only
/// present for the tuner model.
#[derive(Debug, Clone, Copy)]
pub struct DynamicsRecord {
    pub t: usize,
    pub x_or_p: f64,
    pub g: Option<f64>,
    pub lambda: f64,
    pub eta: f64,
    pub y: f64,
    pub diverged: bool,
}

const DIVERGENCE_LIMIT: f64 = 1e12;

fn diverged(values: &[f64]) -> bool {
    values.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
}

/// Simulate `steps` rows; each row records the state before stepping.
/// Divergence (non-finite or magnitude above 1e12) emits a flagged row and
/// truncates the trace.
pub fn simulate(model: &DynamicsModel, prm: &ModelParams, steps: usize) -> Vec<DynamicsRecord> {
    let mut out = Vec::with_capacity(steps);
    match *model {
        DynamicsModel::ConstEta { x0, lambda0, eta } => {
            let mut s = XLambdaState { x: x0, lambda: lambda0 };
            for t in 0..steps {
                let bad = diverged(&[s.x, s.lambda]);
                out.push(DynamicsRecord {
                    t,
                    x_or_p: s.x,
                    g: None,
                    lambda: s.lambda,
                    eta,
                    y: eta * s.lambda - 2.0,
                    diverged: bad,
                });
                if bad {
                    break;
                }
                s = step_x_lambda(&s, eta, prm);
            }
        }
        DynamicsModel::FixedY { x0, eta0, y_target } => {
            let mut s = XLambdaState { x: x0, lambda: (2.0 + y_target) / eta0 };
            let mut eta = eta0;
            for t in 0..steps {
                let bad = diverged(&[s.x, s.lambda, eta]);
                out.push(DynamicsRecord {
                    t,
                    x_or_p: s.x,
                    g: None,
                    lambda: s.lambda,
                    eta,
                    y: eta * s.lambda - 2.0,
                    diverged: bad,
                });
                if bad {
                    break;
                }
                s = step_x_lambda(&s, eta, prm);
                eta = (2.0 + y_target) / s.lambda;
            }
        }
        DynamicsModel::CdatModel { p0, g0, lambda0, eta0, stale_eta } => {
            let mut s = CdatModelState { p: p0, g: g0, lambda: lambda0, eta: eta0 };
            for t in 0..steps {
                let bad = diverged(&[s.p, s.g, s.lambda, s.eta]);
                out.push(DynamicsRecord {
                    t,
                    x_or_p: s.p,
                    g: Some(s.g),
                    lambda: s.lambda,
                    eta: s.eta,
                    y: s.eta * s.lambda - 2.0,
                    diverged: bad,
                });
                if bad {
                    break;
                }
                s = step_cdat_model(&s, prm, stale_eta);
            }
        }
    }
    out
}
