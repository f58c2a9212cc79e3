//! Property tests for the step-size rules, including the golden-section
//! line-minimum oracle on exact quadratics.

use eoslab_core::objective::Objective;
use eoslab_core::problems::{QuadraticProblem, TwoEigenQuadratic};
use eoslab_core::rngutil::{rng_from_seed, unit_sphere};
use eoslab_core::tuners::{on_edge, quadratic_greedy, CdatState, Schedule, ScheduleShape};
use proptest::prelude::*;

/// Golden-section minimizer of a unimodal scalar function on [a, b].
///
/// Pure golden section stalls at the sqrt(machine-eps) flatness floor, so the
/// final bracket is polished with one parabolic-vertex fit; for an exact
/// quadratic the fitted vertex is the minimizer to rounding.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let num = (m - a) * (m - a) * (fm - fb) - (m - b) * (m - b) * (fm - fa);
    let den = (m - a) * (fm - fb) - (m - b) * (fm - fa);
    if den.abs() > 0.0 {
        let vertex = m - 0.5 * num / den;
        if vertex.is_finite() && vertex >= a && vertex <= b {
            return vertex;
        }
    }
    m
}

#[test]
fn greedy_step_is_the_line_minimum_on_quadratics() {
    for seed in 0..10u64 {
        let dim = 3 + (seed as usize % 8) * 5;
        let prob = QuadraticProblem::random_spd(dim, 0.2, 4.0, seed);
        let mut rng = rng_from_seed(100 + seed);
        let mut w = unit_sphere(&mut rng, dim).scaled(2.0);
        for _ in 0..5 {
            let g = prob.gradient(&w, None);
            let u = g.scaled(-1.0);
            let q = prob.quad_form(&w, &u, None);
            let eta = quadratic_greedy(g.dot(&u), q).unwrap();
            let oracle = golden_section(
                |s| prob.value(&w.plus_scaled(s, &u), None),
                0.0,
                3.0 * eta,
                1e-4 * eta,
            );
            assert!(
                (eta - oracle).abs() <= 1e-8 * (1.0 + eta),
                "seed {seed}: greedy {eta} vs golden-section {oracle}"
            );
            w.add_scaled(eta, &u);
        }
    }
}

#[test]
fn on_edge_step_preserves_quadratic_value() {
    for seed in 0..10u64 {
        let prob = QuadraticProblem::random_spd(20, 0.5, 3.0, 40 + seed);
        let mut rng = rng_from_seed(300 + seed);
        let mut w = unit_sphere(&mut rng, 20);
        for _ in 0..10 {
            let g = prob.gradient(&w, None);
            let u = g.scaled(-1.0);
            let q = prob.quad_form(&w, &u, None);
            let eta = on_edge(g.dot(&u), q).unwrap();
            let before = prob.value(&w, None);
            w.add_scaled(eta, &u);
            let after = prob.value(&w, None);
            assert!(
                (after - before).abs() <= 1e-10 * (1.0 + before.abs()),
                "seed {seed}: {before} -> {after}"
            );
        }
    }
}

#[test]
fn on_edge_reflects_two_eigen_geometry() {
    // Along the top eigendirection the on-edge step is exactly 2/lambda.
    let prob = TwoEigenQuadratic::new(2.5, 0.3, 6, 5);
    let w = prob.point_with_energies(1.7, 0.0);
    let g = prob.gradient(&w, None);
    let u = g.scaled(-1.0);
    let q = prob.quad_form(&w, &u, None);
    let eta = on_edge(g.dot(&u), q).unwrap();
    assert!((eta - 2.0 / 2.5).abs() < 1e-12);
}

proptest! {
    #[test]
    fn on_edge_is_twice_greedy(g in -1e6f64..-1e-9, q in 1e-9f64..1e6) {
        let a = quadratic_greedy(g, q).unwrap();
        let b = on_edge(g, q).unwrap();
        prop_assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn cdat_scales_inversely_with_curvature(
        g in -100.0f64..-1e-6,
        q in 1e-6f64..100.0,
        k in 1e-3f64..1e3,
    ) {
        let (ea, _) = CdatState::new(2.0, 0.0, 0.0).step(g, q);
        let (eb, _) = CdatState::new(2.0, 0.0, 0.0).step(g, q * k);
        prop_assert!((eb * k - ea).abs() <= 1e-9 * ea.abs());
    }

    #[test]
    fn schedule_never_exceeds_peak_or_goes_negative(
        peak in 1e-6f64..1e3,
        frac in 0.01f64..0.99,
        horizon in 2u64..5000,
        t in 0u64..6000,
    ) {
        for shape in [ScheduleShape::WarmupConstant, ScheduleShape::WarmupLinearDecay, ScheduleShape::WarmupCosineDecay] {
            let s = Schedule { shape, peak, warmup_frac: frac, horizon };
            let eta = s.eval(t);
            prop_assert!(eta >= 0.0, "{:?} t={} eta={}", shape, t, eta);
            prop_assert!(eta <= peak * (1.0 + 1e-12), "{:?} t={} eta={}", shape, t, eta);
        }
    }

    #[test]
    fn polyak_respects_cap_and_sign(
        f in 0.0f64..1e6,
        gsq in 0.0f64..1e6,
        cap in 1e-6f64..1e3,
    ) {
        let eta = eoslab_core::tuners::polyak(f, 0.0, gsq, cap);
        prop_assert!(eta >= 0.0);
        prop_assert!(eta <= cap);
    }
}
