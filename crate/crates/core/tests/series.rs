use kpz_core::quad::integrate_circle;
use kpz_core::series::*;
use kpz_core::tracy_widom::*;
use kpz_core::{Error, KernelParams, C64};

fn tw() -> TWEvaluator {
    TWEvaluator::new(TwMethod::FredholmOracle).unwrap()
}

#[test]
fn matrix_engine_matches_tensor_quadrature() {
    // Brute-force tensor sum over all 2(n1 + n2) variables on small grids is the oracle.
    let p = KernelParams::new(0.3, 0.5, 1.0, 1.5, 1.0, 0.5).unwrap();
    let cfg = SeriesConfig { level1_nodes: 6, level2_nodes: 6, ..SeriesConfig::default() };
    let g = SeriesGrids::nested(&p, &cfg).unwrap();
    let z = C64::new(0.3, 1.9);
    for (n1, n2) in [(1, 1), (2, 1), (1, 2)] {
        let a = t_kernel(z, n1, n2, &p, &g).unwrap();
        let b = t_kernel_tensor(z, n1, n2, &p, &g, false, 1e9).unwrap();
        assert!((a - b).norm() <= 1e-12 * b.norm(), "T ({n1},{n2}): {a} vs {b}");
        let a = t_tilde_kernel(z, n1, n2, &p, &g).unwrap();
        let b = t_kernel_tensor(z, n1, n2, &p, &g, true, 1e9).unwrap();
        assert!((a - b).norm() <= 1e-12 * b.norm(), "T~ ({n1},{n2}): {a} vs {b}");
    }
}

#[test]
fn tensor_budget_guard_reports_dimension() {
    let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let g = SeriesGrids::nested(&p, &SeriesConfig::default()).unwrap();
    match t_kernel_tensor(C64::new(0.0, 2.0), 2, 2, &p, &g, false, 1e6) {
        Err(Error::BudgetExceeded { dimension, .. }) => assert_eq!(dimension, 8),
        other => panic!("expected a budget refusal, got {other:?}"),
    }
    assert!(t_kernel(C64::new(1.0, 0.0), 1, 1, &p, &g).is_err());
    assert!(t_kernel(C64::new(0.0, 2.0), 0, 1, &p, &g).is_err());
}

#[test]
fn engine_budget_guard_refuses_before_evaluating() {
    let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    let cfg = SeriesConfig { route: Route::Circle, ..SeriesConfig::default() };
    let need = engine_evaluations(&p, &cfg).unwrap();
    let g = SeriesGrids::nested(&p, &cfg).unwrap();
    let rows = g.left1.len() + g.level2_right_len();
    let cols = g.right1.len() + g.level2_left_len();
    assert_eq!(need, (cfg.z_nodes * rows * cols) as f64);
    match two_point_tail(&p, &SeriesConfig { budget: need - 1.0, ..cfg }) {
        Err(Error::BudgetExceeded { dimension, required, .. }) => {
            assert_eq!(dimension, 8);
            assert_eq!(required, need);
        }
        other => panic!("expected a budget refusal, got {other:?}"),
    }
}

#[test]
fn kernel_conjugation_symmetry() {
    let p = KernelParams::new(0.2, -0.4, 1.0, 0.7, 1.5, 0.8).unwrap();
    let g = SeriesGrids::nested(&p, &SeriesConfig::default()).unwrap();
    let z = C64::new(-0.8, 1.83);
    for (n1, n2) in [(1, 1), (2, 2)] {
        let a = t_kernel(z, n1, n2, &p, &g).unwrap();
        let b = t_kernel(z.conj(), n1, n2, &p, &g).unwrap();
        assert!((a - b.conj()).norm() <= 1e-10 * a.norm(), "({n1},{n2}): {a} vs {b}");
    }
}

#[test]
fn two_point_tail_is_converged_in_node_count() {
    let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, 2.0, 1.0).unwrap();
    let coarse = SeriesConfig { route: Route::Circle, estimate_error: false, ..SeriesConfig::default() };
    let fine = SeriesConfig { level1_nodes: 64, level2_nodes: 48, ..coarse };
    let a = two_point_tail(&p, &coarse).unwrap().value;
    let b = two_point_tail(&p, &fine).unwrap().value;
    assert!(((a - b) / b).abs() <= 1e-8, "{a} vs {b}");
}

#[test]
fn one_point_tail_matches_fredholm_oracle() {
    let tw = tw();
    for (x, tau) in [(0.0, 1.0), (1.0, 1.0), (0.0, 2.0)] {
        let mut prev = f64::INFINITY;
        for h in [0.0, 1.0, 2.0, 4.0] {
            let r = one_point_tail(x, tau, h, &SeriesConfig::one_point()).unwrap();
            let want = 1.0 - scaled_cdf(&tw, h, x, tau).unwrap();
            assert!((r.value - want).abs() <= 1e-10, "(x, tau, h) = ({x}, {tau}, {h}): {} vs {want}", r.value);
            assert!(r.truncation_bound <= 1e-5, "truncation bound {}", r.truncation_bound);
            assert!(r.imag_residual <= 1e-6);
            assert!((0.0..=1.0).contains(&r.value) && r.value < prev);
            prev = r.value;
        }
    }
}

#[test]
fn one_point_tail_far_right() {
    let r = one_point_tail(0.0, 1.0, 9.0, &SeriesConfig::one_point()).unwrap();
    // Leading tail form with its first correction 1 - 35/(24 s^{3/2}); the uncorrected
    // form is 5% off at s = 9.
    let s32 = 27.0f64;
    let asym = (-4.0 / 3.0 * s32).exp() / (16.0 * std::f64::consts::PI * s32) * (1.0 - 35.0 / (24.0 * s32));
    assert!((r.value / asym - 1.0).abs() <= 0.01, "{} vs {asym}", r.value);
    assert!((tail_asymptotic_cdf(9.0).unwrap() / (1.0 - r.value) - 1.0).abs() <= 0.03);
    // The n = 1 term dominates; the ledger keeps the higher terms exponentially smaller.
    let t1 = r.term(1, 0).unwrap().norm();
    let t2 = r.term(2, 0).unwrap().norm();
    assert!(t2 < 1e-10 * t1);
}

#[test]
fn one_point_tail_derivative_matches_density() {
    let tw = tw();
    for (x, tau, h) in [(0.0, 1.0, 2.0), (1.0, 1.0, 3.0), (0.5, 2.0, 1.0)] {
        let d = one_point_tail_derivative(x, tau, h, &SeriesConfig::one_point()).unwrap();
        let want = -scaled_pdf(&tw, h, x, tau).unwrap();
        assert!((d.value - want).abs() <= 1e-9 * want.abs().max(1e-3), "({x},{tau},{h}): {} vs {want}", d.value);
    }
}

#[test]
fn routes_agree_on_the_first_channel() {
    // Frozen from a run of both routes: relative differences 6.5e-8 (h1 = 2) and
    // 7.6e-9 (h1 = 4) at the default grids.
    for (h1, tol) in [(2.0, 2e-7), (4.0, 2e-8)] {
        let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, h1, 2.0).unwrap();
        let c = two_point_tail(&p, &SeriesConfig { route: Route::Circle, n1_max: 1, ..SeriesConfig::default() }).unwrap();
        let d = two_point_tail(&p, &SeriesConfig { route: Route::Dominant, n1_max: 1, ..SeriesConfig::default() }).unwrap();
        assert!(((c.value - d.value) / d.value).abs() <= tol, "h1 = {h1}: {} vs {}", c.value, d.value);
    }
    assert_eq!(resolve_route(Route::Auto, 3.9), Route::Circle);
    assert_eq!(resolve_route(Route::Auto, DOMINANT_THRESHOLD), Route::Dominant);
}

#[test]
fn first_channel_direct_route_matches_z_quadrature() {
    let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, 3.0, 1.0).unwrap();
    let cfg = SeriesConfig::default();
    let nested = SeriesGrids::nested(&p, &cfg).unwrap();
    let dominant = SeriesGrids::dominant(&p, &cfg).unwrap();
    for n2 in 1..=2 {
        let direct = n1_equals_1_term(n2, &p, &dominant).unwrap();
        let circle = integrate_circle(
            |z| t_tilde_kernel(z, 1, n2, &p, &nested).unwrap() / (z * (1.0 - z)),
            cfg.z_radius,
            cfg.z_nodes,
        )
        .unwrap();
        assert!((direct - circle).norm() <= 1e-8 * circle.norm(), "n2 = {n2}: {direct} vs {circle}");
        if n2 == 1 {
            assert!(direct.im.abs() <= 1e-8 * direct.norm());
        }
    }
    assert!(n1_equals_1_term(0, &p, &dominant).is_err());
}

#[test]
fn two_point_tail_is_bounded_by_marginals() {
    let tw = tw();
    for (h1, h2) in [(0.0, 1.0), (1.0, 0.5), (2.0, -1.0)] {
        let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, h1, h2).unwrap();
        let r = two_point_tail(&p, &SeriesConfig::default()).unwrap();
        let m1 = 1.0 - scaled_cdf(&tw, h1, 0.0, 1.0).unwrap();
        let m2 = 1.0 - scaled_cdf(&tw, h1 + h2, 0.0, 2.0).unwrap();
        assert!(r.value <= m1.min(m2) + 1e-6, "({h1},{h2}): {} vs {m1}, {m2}", r.value);
        assert!(r.value >= -1e-6);
        assert!(r.imag_residual <= 1e-6 * r.value.abs().max(1.0));
        assert_eq!(r.term_ledger.len(), 4);
    }
}

#[test]
fn two_point_tail_saturates_toward_the_marginal() {
    // With a low second threshold the joint event approaches the first marginal. At
    // h2 = -3 the n2 <= 3 series still converges; deeper thresholds are out of reach of
    // the truncated n2 series.
    let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, 1.0, -3.0).unwrap();
    let cfg = SeriesConfig { n2_max: 3, route: Route::Circle, ..SeriesConfig::default() };
    let r = two_point_tail(&p, &cfg).unwrap();
    let m = one_point_tail(0.0, 1.0, 1.0, &SeriesConfig::one_point()).unwrap();
    assert!(r.value <= m.value + 1e-6);
    assert!((r.value - m.value).abs() <= 2e-2 * m.value, "{} vs {}", r.value, m.value);
}

#[test]
fn config_validation() {
    let bad = [
        SeriesConfig { z_radius: 1.0, ..SeriesConfig::default() },
        SeriesConfig { level1_nodes: 3, ..SeriesConfig::default() },
        SeriesConfig { z_nodes: 4, ..SeriesConfig::default() },
        SeriesConfig { epsilon: 0.0, ..SeriesConfig::default() },
        SeriesConfig { tail_tol: 1.0, ..SeriesConfig::default() },
    ];
    let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    for c in bad {
        assert!(two_point_tail(&p, &c).is_err());
    }
    assert!(f_weight(C64::new(0.0, 1.0), 1, &p).is_err());
    let v = f_weight(C64::new(-1.0, 0.0), 1, &KernelParams::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
    assert!((v.re - (1.0f64 / 3.0).exp()).abs() < 1e-15);
    let z = C64::new(-0.7, 1.3);
    assert!((f_weight(z.conj(), 2, &p).unwrap() - f_weight(z, 2, &p).unwrap().conj()).norm() < 1e-15);
}

#[test]
fn layout_of_single_level_is_centred() {
    assert_eq!(centred_height(1.0, 2.0, 3.0), 3.5);
    let (l, r, _) = single_level_grids(0.0, 1.0, 4.0, 16, 1e-18, &kpz_core::contour::Layout::default()).unwrap();
    assert!((l.nodes[0].re + r.nodes[0].re).abs() < 1e-14);
    assert!(single_level_grids(0.0, 0.0, 4.0, 16, 1e-18, &kpz_core::contour::Layout::default()).is_err());
}
