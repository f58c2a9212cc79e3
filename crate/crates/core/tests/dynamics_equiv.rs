//! The normalized (p, y) system is algebraically the squared/rescaled image
//! of the projected (x, lambda) system. Co-simulate both under a shared
//! step-size sequence and check the change of variables holds along the whole
//! trajectory.

use eoslab_core::dynamics::{step_p_y, step_x_lambda, ModelParams, PYState, XLambdaState};
use eoslab_core::rngutil::rng_from_seed;
use rand::Rng;

/// Build a bounded step-size sequence by driving the x-system with a random
/// normalized-sharpness target per step; the frozen eta list is then the
/// shared schedule for both systems.
fn eta_schedule(prm: &ModelParams, x0: f64, lambda0: f64, steps: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut s = XLambdaState { x: x0, lambda: lambda0 };
    let mut etas = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        let y_target = -0.35 + 0.43 * rng.gen::<f64>();
        let eta = (2.0 + y_target) / s.lambda;
        etas.push(eta);
        s = step_x_lambda(&s, eta, prm);
    }
    etas
}

#[test]
fn p_y_system_matches_squared_x_lambda_system() {
    const STEPS: usize = 500;
    for draw in 0..20u64 {
        let mut rng = rng_from_seed(1000 + draw);
        let prm = ModelParams::new(0.1 * rng.gen::<f64>(), 0.5 * rng.gen::<f64>());
        let x0 = 0.1 + 0.9 * rng.gen::<f64>();
        let lambda0 = 0.5 + 1.5 * rng.gen::<f64>();
        let etas = eta_schedule(&prm, x0, lambda0, STEPS, 2000 + draw);

        let mut xs = XLambdaState { x: x0, lambda: lambda0 };
        let mut ps = PYState { p: x0 * x0, y: etas[0] * lambda0 - 2.0, eta: etas[0] };
        for t in 0..STEPS {
            let p_ref = xs.x * xs.x;
            assert!(
                (ps.p - p_ref).abs() <= 1e-10 * (1.0 + p_ref.abs()),
                "draw {draw} t={t}: p {} vs x^2 {}",
                ps.p,
                p_ref
            );
            let y_ref = etas[t] * xs.lambda - 2.0;
            assert!(
                (ps.y - y_ref).abs() <= 1e-10 * (1.0 + y_ref.abs()),
                "draw {draw} t={t}: y {} vs eta*lambda-2 {}",
                ps.y,
                y_ref
            );
            xs = step_x_lambda(&xs, etas[t], &prm);
            ps = step_p_y(&ps, etas[t + 1], &prm);
        }
        assert!(xs.x.is_finite() && xs.lambda.is_finite(), "draw {draw} left the finite range");
    }
}
