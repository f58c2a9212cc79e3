//! Sequential training loop: problem + optimizer + tuner + instrumentation.
//!
//! One run is strictly sequential (every tuner is a feedback loop through the
//! iterates). The loop emits one trace record per step describing the state
//! *before* that step's update.

use alloc::vec::Vec;

use rand::Rng;

#[allow(unused_imports)]
use num_traits::Float;

use crate::curvature::{self, PowerIterOpts, SharpnessEstimate};
use crate::objective::Objective;
use crate::optimizers::{OptimizerHyper, OptimizerKind, OptimizerState};
use crate::rngutil;
use crate::tuners::{
    backtracking_linesearch, polyak, CdatState, HypergradState, LinesearchParams, Schedule,
};
use crate::vector::ParamVec;

/// State magnitude / loss magnitude beyond which a run counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub enum TunerConfig {
    Constant { eta: f64 },
    Schedule(Schedule),
    Cdat { sigma: f64, eps: f64, beta: f64 },
    Linesearch(LinesearchParams),
    Polyak { f_star: f64, eta_max: f64 },
    Hypergradient { eta0: f64, beta: f64 },
    ExactEdge { sigma: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub hyper: OptimizerHyper,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { kind: OptimizerKind::Gd, hyper: OptimizerHyper::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub steps: usize,
    /// `None` = full batch; otherwise per-epoch shuffling without replacement,
    /// remainder batch dropped.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Cadence of the expensive metrics (sharpness, alignment, full gradient
    /// norm). Loss and eta are recorded every step.
    pub metrics_every: usize,
    /// Evaluate both the greedy and the on-edge candidate step each iteration
    /// and record their objective difference (requires a cdat tuner).
    pub probe: bool,
    pub power_iter: PowerIterOpts,
}

impl TrainOptions {
    pub fn new(steps: usize, seed: u64) -> Self {
        TrainOptions {
            steps,
            batch_size: None,
            seed,
            metrics_every: 1,
            probe: false,
            power_iter: PowerIterOpts::default(),
        }
    }
}

/// Per-step flags; serialized into the `flags` trace column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepFlags {
    pub diverged: bool,
    pub linesearch_exhausted: bool,
    pub degenerate_curvature: bool,
}

impl StepFlags {
    pub fn any(&self) -> bool {
        self.diverged || self.linesearch_exhausted || self.degenerate_curvature
    }
}

/// One trace row. Metric fields are `None` on steps where they were not
/// computed (see [`TrainOptions::metrics_every`]).
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub step: usize,
    /// Full-objective loss at the pre-update point (also in mini-batch runs).
    pub loss: f64,
    pub eta: Option<f64>,
    pub grad_norm: Option<f64>,
    pub sharpness: Option<f64>,
    pub eta_lambda: Option<f64>,
    pub y: Option<f64>,
    pub align_top: Option<f64>,
    pub update_angle: Option<f64>,
    pub flags: StepFlags,
    /// Cumulative objective evaluations spent by the optimization path
    /// (gradient, curvature, line-search trials); metric instrumentation is
    /// not counted.
    pub obj_evals: u64,
    /// Probe column: `f(w + eta_oe u) - f(w + eta_qg u)`.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub records: Vec<TraceRecord>,
    pub diverged: bool,
    pub final_w: ParamVec,
}

enum TunerState {
    Constant(f64),
    Schedule(Schedule),
    Cdat(CdatState),
    Linesearch(LinesearchParams),
    Polyak { f_star: f64, eta_max: f64 },
    Hypergradient(HypergradState),
    ExactEdge { sigma: f64 },
}

struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    batch_size: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, batch_size: usize, seed: u64) -> Self {
        assert!(batch_size >= 1 && batch_size <= n, "batch size must be in 1..=n");
        let mut s = BatchSampler {
            order: (0..n).collect(),
            pos: 0,
            batch_size,
            rng: rngutil::rng_from_seed(seed),
        };
        s.shuffle();
        s
    }

    fn shuffle(&mut self) {
        // Fisher–Yates.
        for i in (1..self.order.len()).rev() {
            let j = self.rng.gen_range(0..=i);
            self.order.swap(i, j);
        }
        self.pos = 0;
    }

    fn next_batch(&mut self) -> Vec<usize> {
        if self.pos + self.batch_size > self.order.len() {
            self.shuffle(); // drop the remainder batch
        }
        let out = self.order[self.pos..self.pos + self.batch_size].to_vec();
        self.pos += self.batch_size;
        out
    }
}

/// Run the training loop and collect the trace.
pub fn run_training(
    obj: &dyn Objective,
    w0: &ParamVec,
    opt_cfg: &OptimizerConfig,
    tuner_cfg: &TunerConfig,
    opts: &TrainOptions,
) -> RunResult {
    assert!(opts.steps >= 1);
    assert!(opts.metrics_every >= 1);
    let dim = obj.dim();
    assert_eq!(w0.len(), dim, "w0 dimension mismatch");
    if opts.probe {
        assert!(
            matches!(tuner_cfg, TunerConfig::Cdat { .. }),
            "probe runs require a cdat tuner"
        );
    }

    let mut w = w0.clone();
    let mut opt = OptimizerState::new(opt_cfg.kind, dim, opt_cfg.hyper);
    let mut tuner = match tuner_cfg.clone() {
        TunerConfig::Constant { eta } => TunerState::Constant(eta),
        TunerConfig::Schedule(s) => TunerState::Schedule(s),
        TunerConfig::Cdat { sigma, eps, beta } => TunerState::Cdat(CdatState::new(sigma, eps, beta)),
        TunerConfig::Linesearch(p) => TunerState::Linesearch(p),
        TunerConfig::Polyak { f_star, eta_max } => TunerState::Polyak { f_star, eta_max },
        TunerConfig::Hypergradient { eta0, beta } => {
            TunerState::Hypergradient(HypergradState::new(eta0, beta))
        }
        TunerConfig::ExactEdge { sigma } => TunerState::ExactEdge { sigma },
    };
    let mut sampler = opts.batch_size.map(|bs| {
        assert!(obj.batch_capable(), "mini-batch run on a batch-incapable objective");
        BatchSampler::new(obj.num_samples(), bs, opts.seed)
    });

    let mut records = Vec::with_capacity(opts.steps);
    let mut diverged = false;
    let mut evals: u64 = 0;
    let mut u_prev: Option<ParamVec> = None;

    for t in 0..opts.steps {
        let batch_vec = sampler.as_mut().map(|s| s.next_batch());
        let batch = batch_vec.as_deref();
        let full_batch = batch.is_none();

        // Full-objective loss is the trace loss even in mini-batch runs.
        let loss = obj.value(&w, None);
        if !loss.is_finite() || loss.abs() > DIVERGENCE_LIMIT {
            diverged = true;
            records.push(TraceRecord {
                step: t,
                loss,
                eta: None,
                grad_norm: None,
                sharpness: None,
                eta_lambda: None,
                y: None,
                align_top: None,
                update_angle: None,
                flags: StepFlags { diverged: true, ..Default::default() },
                obj_evals: evals,
                delta: None,
            });
            break;
        }

        // Only line search and Polyak consume the objective value itself.
        let needs_f = matches!(tuner, TunerState::Linesearch(_) | TunerState::Polyak { .. });
        let (f_batch, grad) = if needs_f {
            evals += 2;
            if full_batch {
                (loss, obj.gradient(&w, batch))
            } else {
                obj.value_grad(&w, batch)
            }
        } else {
            evals += 1;
            (f64::NAN, obj.gradient(&w, batch))
        };

        if let TunerState::Hypergradient(hg) = &mut tuner {
            // grad here is the gradient at w_t = w_{t-1} + eta u_{t-1}, which
            // is exactly the "next gradient" the multiplicative update needs.
            if let Some(up) = &u_prev {
                hg.update(&grad, up);
            }
        }

        let u = opt.direction(&grad);
        let mut flags = StepFlags::default();
        let mut tuner_sharpness: Option<SharpnessEstimate> = None;
        let metric_seed = rngutil::derive_seed(opts.seed, t as u64);

        let eta = match &mut tuner {
            TunerState::Constant(eta) => *eta,
            TunerState::Schedule(s) => s.eval(t as u64),
            TunerState::Cdat(state) => {
                let g_dot_u = grad.dot(&u);
                let q = obj.quad_form(&w, &u, batch);
                evals += 1;
                let (eta, degenerate) = state.step(g_dot_u, q);
                flags.degenerate_curvature = degenerate;
                eta
            }
            TunerState::Linesearch(p) => {
                let g_dot_u = grad.dot(&u);
                let out = backtracking_linesearch(obj, &w, &u, f_batch, g_dot_u, batch, p);
                evals += out.evals;
                flags.linesearch_exhausted = out.exhausted;
                out.eta
            }
            TunerState::Polyak { f_star, eta_max } => polyak(f_batch, *f_star, grad.norm_sq(), *eta_max),
            TunerState::Hypergradient(hg) => hg.eta,
            TunerState::ExactEdge { sigma } => {
                let est = curvature::sharpness(obj, &w, &opts.power_iter, metric_seed)
                    .expect("sharpness estimation failed");
                evals += est.iterations as u64;
                let eta = match crate::tuners::exact_edge(*sigma, est.lambda_abs_max) {
                    Ok(eta) => eta,
                    Err(_) => {
                        flags.degenerate_curvature = true;
                        0.0
                    }
                };
                tuner_sharpness = Some(est);
                eta
            }
        };

        let delta = if opts.probe {
            if let TunerState::Cdat(state) = &tuner {
                state.smoothed_ratio().map(|ratio| {
                    let f_oe = obj.value(&w.plus_scaled(2.0 * ratio, &u), batch);
                    let f_qg = obj.value(&w.plus_scaled(ratio, &u), batch);
                    evals += 2;
                    f_oe - f_qg
                })
            } else {
                None
            }
        } else {
            None
        };

        let metrics_step = t % opts.metrics_every == 0;
        let (mut grad_norm, mut sharpness, mut eta_lambda, mut y, mut align_top, mut update_angle) =
            (None, None, None, None, None, None);
        if metrics_step {
            grad_norm = Some(if full_batch { grad.norm() } else { obj.gradient(&w, None).norm() });
            let est = match tuner_sharpness {
                Some(est) if !opt_cfg.kind.is_preconditioned() => Some(est),
                _ => {
                    if opt_cfg.kind.is_preconditioned() {
                        let diag = opt.preconditioner_diag(opt_cfg.hyper.eps);
                        curvature::preconditioned_sharpness(
                            obj,
                            &w,
                            &diag,
                            &opts.power_iter,
                            metric_seed,
                        )
                        .ok()
                    } else {
                        curvature::sharpness(obj, &w, &opts.power_iter, metric_seed).ok()
                    }
                }
            };
            if let Some(est) = est {
                sharpness = Some(est.lambda_abs_max);
                eta_lambda = Some(eta * est.lambda_abs_max);
                y = Some(eta * est.lambda_abs_max - 2.0);
                align_top = Some(curvature::alignment(&u, &est.eigvec));
            }
            update_angle = u_prev.as_ref().map(|up| curvature::update_angle(&u, up));
        }

        records.push(TraceRecord {
            step: t,
            loss,
            eta: Some(eta),
            grad_norm,
            sharpness,
            eta_lambda,
            y,
            align_top,
            update_angle,
            flags,
            obj_evals: evals,
            delta,
        });

        w.add_scaled(eta, &u);
        u_prev = Some(u);
    }

    RunResult { records, diverged, final_w: w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticProblem;
    use alloc::vec;

    fn gd() -> OptimizerConfig {
        OptimizerConfig::default()
    }

    #[test]
    fn cdat_sigma_one_minimizes_quadratic_fast() {
        // Exact line minimization along the gradient on a well-conditioned
        // quadratic: machine-precision loss within dim*5 steps.
        let dim = 10;
        let prob = QuadraticProblem::random_spd(dim, 0.5, 2.0, 42);
        let w0 = crate::rngutil::unit_sphere(&mut crate::rngutil::rng_from_seed(1), dim);
        let opts = TrainOptions { metrics_every: usize::MAX, ..TrainOptions::new(dim * 5, 0) };
        let res = run_training(
            &prob,
            &w0,
            &gd(),
            &TunerConfig::Cdat { sigma: 1.0, eps: 0.0, beta: 0.0 },
            &opts,
        );
        assert!(!res.diverged);
        let loss0 = res.records[0].loss;
        let loss_t = res.records.last().unwrap().loss;
        assert!(loss_t <= 1e-16 * loss0, "loss {loss_t} vs initial {loss0}");
    }

    #[test]
    fn cdat_sigma_two_and_a_half_diverges_in_1d() {
        let prob = QuadraticProblem::new_diag(vec![1.0], ParamVec::zeros(1)).unwrap();
        let w0 = ParamVec::new(vec![1.0]);
        let opts = TrainOptions { metrics_every: usize::MAX, ..TrainOptions::new(200, 0) };
        let res = run_training(
            &prob,
            &w0,
            &gd(),
            &TunerConfig::Cdat { sigma: 2.5, eps: 0.0, beta: 0.0 },
            &opts,
        );
        assert!(res.diverged);
        assert!(res.records.last().unwrap().flags.diverged);
    }

    #[test]
    fn probe_delta_matches_quadratic_identity() {
        // On an exact quadratic, delta = (eta_oe - eta_qg)^2 * q / 2.
        let prob = QuadraticProblem::random_spd(6, 0.5, 3.0, 7);
        let w0 = crate::rngutil::unit_sphere(&mut crate::rngutil::rng_from_seed(2), 6);
        let opts = TrainOptions {
            probe: true,
            metrics_every: usize::MAX,
            ..TrainOptions::new(10, 0)
        };
        let res = run_training(
            &prob,
            &w0,
            &gd(),
            &TunerConfig::Cdat { sigma: 1.0, eps: 0.0, beta: 0.0 },
            &opts,
        );
        let mut w = w0.clone();
        for r in &res.records {
            let delta = r.delta.expect("probe column present on every step");
            let g = prob.gradient(&w, None);
            let u = g.scaled(-1.0);
            let q = prob.quad_form(&w, &u, None);
            let eta_qg = crate::tuners::quadratic_greedy(g.dot(&u), q).unwrap();
            let expected = eta_qg * eta_qg * q / 2.0;
            assert!(
                (delta - expected).abs() <= 1e-10 * (1.0 + expected.abs()),
                "step {}: {delta} vs {expected}",
                r.step
            );
            assert!(delta > 0.0);
            w.add_scaled(r.eta.unwrap(), &u);
        }
    }

    #[test]
    fn schedule_tuner_follows_schedule() {
        use crate::tuners::{Schedule, ScheduleShape};
        let prob = QuadraticProblem::new_diag(vec![1.0, 1.0], ParamVec::zeros(2)).unwrap();
        let w0 = ParamVec::new(vec![1.0, -1.0]);
        let sched = Schedule {
            shape: ScheduleShape::WarmupLinearDecay,
            peak: 0.5,
            warmup_frac: 0.2,
            horizon: 20,
        };
        let opts = TrainOptions { metrics_every: usize::MAX, ..TrainOptions::new(20, 0) };
        let res = run_training(&prob, &w0, &gd(), &TunerConfig::Schedule(sched), &opts);
        for (t, r) in res.records.iter().enumerate() {
            assert_eq!(r.eta.unwrap(), sched.eval(t as u64));
        }
    }

    #[test]
    fn determinism_bitwise() {
        use crate::problems::{make_blobs, LogisticProblem};
        let prob = LogisticProblem::new(make_blobs(3, 64, 4, 3, 1.2), 1e-5);
        let w0 = ParamVec::zeros(prob.dim());
        let opts = TrainOptions {
            batch_size: Some(16),
            metrics_every: 5,
            ..TrainOptions::new(30, 11)
        };
        let cfg = TunerConfig::Cdat { sigma: 2.0, eps: 0.0, beta: 0.9 };
        let a = run_training(&prob, &w0, &gd(), &cfg, &opts);
        let b = run_training(&prob, &w0, &gd(), &cfg, &opts);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.loss.to_bits(), rb.loss.to_bits());
            assert_eq!(ra.eta.map(f64::to_bits), rb.eta.map(f64::to_bits));
            assert_eq!(ra.sharpness.map(f64::to_bits), rb.sharpness.map(f64::to_bits));
            assert_eq!(ra.obj_evals, rb.obj_evals);
        }
        assert_eq!(a.final_w, b.final_w);
    }

    #[test]
    fn epoch_sampler_partitions_without_replacement() {
        let mut s = BatchSampler::new(10, 3, 4);
        // Three batches per epoch, remainder dropped; every epoch is a
        // permutation prefix so indices within an epoch never repeat.
        for _ in 0..5 {
            let mut seen = alloc::collections::BTreeSet::new();
            for _ in 0..3 {
                for i in s.next_batch() {
                    assert!(seen.insert(i), "index {i} repeated within epoch");
                }
            }
            assert_eq!(seen.len(), 9);
        }
    }
}
