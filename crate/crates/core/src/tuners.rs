//! Step-size selection rules.
//!
//! All rules map local information at the current point (loss, gradient,
//! curvature along the update) to a learning rate. The curvature-driven rules
//! share the same two scalars: `g_dot_u = ∇f(w)'u` and `q = u'∇²f(w)u`.

use crate::ema::EmaAccumulator;
use crate::error::{Error, Result};
use crate::objective::{Batch, Objective};
use crate::vector::ParamVec;

#[allow(unused_imports)]
use num_traits::Float;

/// Minimizer of the quadratic model of `f` along `u`: `eta = -g_dot_u / q`.
///
/// Requires positive curvature (`q > 0`) and a descent direction; callers that
/// cannot guarantee either should use [`CdatState::step`], whose guards handle
/// both cases.
pub fn quadratic_greedy(g_dot_u: f64, q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Err(Error::NonPositiveCurvature { q });
    }
    Ok(-g_dot_u / q)
}

/// Largest step for which the quadratic model does not exceed `f(w)`:
/// exactly twice [`quadratic_greedy`].
pub fn on_edge(g_dot_u: f64, q: f64) -> Result<f64> {
    Ok(2.0 * quadratic_greedy(g_dot_u, q)?)
}

/// Fixed multiple of the inverse top eigenvalue: `eta = sigma / lambda_max`.
pub fn exact_edge(sigma: f64, lambda_max: f64) -> Result<f64> {
    if lambda_max <= 0.0 {
        return Err(Error::NonPositiveSharpness { lambda: lambda_max });
    }
    Ok(sigma / lambda_max)
}

/// Gap-to-optimum step `eta = min((f - f_star) / ||g||^2, eta_max)`,
/// with `eta = 0` when the gradient vanishes.
pub fn polyak(f_val: f64, f_star: f64, grad_norm_sq: f64, eta_max: f64) -> f64 {
    if grad_norm_sq <= 0.0 {
        return 0.0;
    }
    ((f_val - f_star) / grad_norm_sq).min(eta_max)
}

/// Curvature-ratio tuner with scale factor, ascent/negative-curvature guards,
/// and optional EMA smoothing of numerator and denominator.
///
/// `eta = sigma * max(-g_dot_u, 0)~ / (|q| + eps)~` where `~` denotes the EMA.
/// With `beta = 0`, `eps = 0`, `sigma = 1`, a descent direction and positive
/// curvature this reduces exactly to [`quadratic_greedy`]; `sigma = 2` gives
/// the on-edge rule.
#[derive(Debug, Clone)]
pub struct CdatState {
    n_ema: EmaAccumulator,
    d_ema: EmaAccumulator,
    pub sigma: f64,
    pub eps: f64,
}

impl CdatState {
    pub fn new(sigma: f64, eps: f64, beta: f64) -> Self {
        assert!(eps >= 0.0, "cdat eps must be nonnegative");
        CdatState { n_ema: EmaAccumulator::new(beta), d_ema: EmaAccumulator::new(beta), sigma, eps }
    }

    /// Feed this step's statistics and return `(eta, degenerate)`.
    ///
    /// `degenerate` is set when the smoothed denominator is exactly zero
    /// (possible only with `eps = 0`); the rule then emits `eta = 0` so a
    /// sweep can keep running.
    pub fn step(&mut self, g_dot_u: f64, q: f64) -> (f64, bool) {
        let n_t = (-g_dot_u).max(0.0);
        let d_t = q.abs() + self.eps;
        let n_s = self.n_ema.observe(n_t);
        let d_s = self.d_ema.observe(d_t);
        if d_s == 0.0 {
            (0.0, true)
        } else {
            (self.sigma * n_s / d_s, false)
        }
    }

    /// Smoothed `n/d` ratio without the scale factor, i.e. the current greedy
    /// step estimate. `None` while the denominator is zero.
    pub fn smoothed_ratio(&self) -> Option<f64> {
        let d = self.d_ema.value();
        if self.d_ema.is_initialized() && d != 0.0 {
            Some(self.n_ema.value() / d)
        } else {
            None
        }
    }
}

/// Backtracking line-search parameters. `eta_prev` is carried across steps:
/// the next initial guess is `min(c_plus * eta_prev, 1)`, and
/// `c_plus = +inf` encodes "restart from 1 every step".
#[derive(Debug, Clone, Copy)]
pub struct LinesearchParams {
    /// Sufficient-decrease slope factor.
    pub c: f64,
    /// Growth factor for the initial guess.
    pub c_plus: f64,
    /// Backtracking shrink factor, in (0, 1).
    pub c_minus: f64,
    /// Relative decrease slack: acceptance compares against `(1 + delta) f(w)`.
    pub delta: f64,
    /// Cap on backtracking reductions after the initial guess.
    pub max_backtracks: usize,
    pub eta_prev: f64,
}

impl Default for LinesearchParams {
    fn default() -> Self {
        LinesearchParams {
            c: 1e-4,
            c_plus: 4.0,
            c_minus: 0.8,
            delta: 0.0,
            max_backtracks: 100,
            eta_prev: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinesearchOutcome {
    pub eta: f64,
    /// Number of objective evaluations spent on trial points.
    pub evals: u64,
    /// Criterion still unmet after the backtrack cap; `eta` is then the
    /// smallest step tried.
    pub exhausted: bool,
}

pub fn linesearch_initial_guess(c_plus: f64, eta_prev: f64) -> f64 {
    if c_plus.is_infinite() {
        1.0
    } else {
        (c_plus * eta_prev).min(1.0)
    }
}

/// Accept the first `eta` in `{c_minus^k * eta0}` with
/// `f(w + eta u) <= (1 + delta) f(w) + c * eta * g_dot_u`.
pub fn backtrack_from(
    obj: &dyn Objective,
    w: &ParamVec,
    u: &ParamVec,
    f_w: f64,
    g_dot_u: f64,
    batch: Batch,
    eta0: f64,
    p: &LinesearchParams,
) -> LinesearchOutcome {
    assert!(eta0 > 0.0 && p.c_minus > 0.0 && p.c_minus < 1.0);
    let bound = (1.0 + p.delta) * f_w;
    let mut eta = eta0;
    let mut evals = 0;
    for k in 0..=p.max_backtracks {
        let f_trial = obj.value(&w.plus_scaled(eta, u), batch);
        evals += 1;
        if f_trial <= bound + p.c * eta * g_dot_u {
            return LinesearchOutcome { eta, evals, exhausted: false };
        }
        if k < p.max_backtracks {
            eta *= p.c_minus;
        }
    }
    LinesearchOutcome { eta, evals, exhausted: true }
}

/// Full line search step: compute the initial guess from `eta_prev`, backtrack,
/// and store the accepted step back into `p.eta_prev`.
pub fn backtracking_linesearch(
    obj: &dyn Objective,
    w: &ParamVec,
    u: &ParamVec,
    f_w: f64,
    g_dot_u: f64,
    batch: Batch,
    p: &mut LinesearchParams,
) -> LinesearchOutcome {
    let eta0 = linesearch_initial_guess(p.c_plus, p.eta_prev);
    let out = backtrack_from(obj, w, u, f_w, g_dot_u, batch, eta0, p);
    p.eta_prev = out.eta;
    out
}

/// Multiplicative hypergradient state: `eta' = eta * (1 - beta * cos(g_next, u))`.
#[derive(Debug, Clone, Copy)]
pub struct HypergradState {
    pub eta: f64,
    pub beta: f64,
}

impl HypergradState {
    pub fn new(eta0: f64, beta: f64) -> Self {
        assert!(eta0 > 0.0 && beta >= 0.0);
        HypergradState { eta: eta0, beta }
    }

    /// Update the stored learning rate from the gradient at the stepped point
    /// and the update direction just taken. Returns `true` (flag) when a
    /// zero-norm input left `eta` unchanged.
    pub fn update(&mut self, grad_next: &ParamVec, u: &ParamVec) -> bool {
        let gn = grad_next.norm();
        let un = u.norm();
        if gn == 0.0 || un == 0.0 {
            return true;
        }
        let cosine = grad_next.dot(u) / (gn * un);
        self.eta *= 1.0 - self.beta * cosine;
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleShape {
    WarmupConstant,
    WarmupLinearDecay,
    WarmupCosineDecay,
}

/// Linear warm-up from 0 to `peak` over `round(warmup_frac * horizon)` steps,
/// then the chosen decay shape down to 0 at `horizon`.
#[derive(Debug, Clone, Copy)]
pub struct Schedule {
    pub shape: ScheduleShape,
    pub peak: f64,
    pub warmup_frac: f64,
    pub horizon: u64,
}

impl Schedule {
    pub fn warmup_steps(&self) -> u64 {
        (self.warmup_frac * self.horizon as f64).round() as u64
    }

    pub fn eval(&self, t: u64) -> f64 {
        let w = self.warmup_steps();
        if t <= w && w > 0 {
            return self.peak * t as f64 / w as f64;
        }
        if self.horizon <= w {
            return if self.shape == ScheduleShape::WarmupConstant { self.peak } else { 0.0 };
        }
        let frac = (t - w) as f64 / (self.horizon - w) as f64;
        match self.shape {
            ScheduleShape::WarmupConstant => self.peak,
            ScheduleShape::WarmupLinearDecay => self.peak * (1.0 - frac).max(0.0),
            ScheduleShape::WarmupCosineDecay => {
                if t >= self.horizon {
                    0.0
                } else {
                    self.peak * 0.5 * (1.0 + (core::f64::consts::PI * frac).cos())
                }
            }
        }
    }
}
