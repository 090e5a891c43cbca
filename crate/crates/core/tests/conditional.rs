use kpz_core::conditional::*;
use kpz_core::series::*;
use kpz_core::tracy_widom::*;
use kpz_core::ConditionalParams;

fn tw() -> TWEvaluator {
    TWEvaluator::new(TwMethod::FredholmOracle).unwrap()
}

fn cp(h: f64, hp: f64) -> ConditionalParams {
    ConditionalParams::new(0.0, 0.0, 1.0, 1.0, h, hp).unwrap()
}

// op_I1 / i1_asymptotic from an independent NumPy evaluation (Gauss-Legendre on the
// steepest-descent rays with 200 nodes per ray).
const I1_ORACLE: &[(f64, i32, i32, f64)] = &[
    (9.0, 0, 0, 0.950012),
    (9.0, 0, 5, 0.667332),
    (9.0, 2, 3, 0.725957),
    (16.0, 0, 0, 0.977972),
    (16.0, 0, 5, 0.831084),
    (16.0, 2, 3, 0.865980),
    (25.0, 0, 0, 0.988537),
    (25.0, 0, 5, 0.906734),
    (25.0, 2, 3, 0.927251),
];

#[test]
fn i1_ratio_matches_oracle_table() {
    let cfg = SeriesConfig::default();
    for &(hs, a, b, want) in I1_ORACLE {
        let p = cp(2.0, hs);
        let r = op_i1(a, b, &p, &cfg).unwrap().ratio(&i1_asymptotic(a, b, &p).unwrap());
        assert!((r.re - want).abs() < 2e-6, "h* = {hs}, ({a},{b}): {} vs {want}", r.re);
        assert!(r.im.abs() < 1e-10);
    }
}

#[test]
fn i1_deviation_shrinks_with_h_star() {
    let cfg = SeriesConfig::default();
    for a in 0..=5 {
        for b in 0..=(5 - a) {
            let dev: Vec<f64> = [9.0, 16.0, 25.0]
                .iter()
                .map(|hs| {
                    let p = cp(2.0, *hs);
                    (op_i1(a, b, &p, &cfg).unwrap().ratio(&i1_asymptotic(a, b, &p).unwrap()).re - 1.0).abs()
                })
                .collect();
            assert!(dev[0] > dev[1] && dev[1] > dev[2], "({a},{b}): {dev:?}");
        }
    }
}

#[test]
fn i1_sign_alternation_and_symmetry() {
    let cfg = SeriesConfig::default();
    let p = cp(2.0, 16.0);
    let r = op_i1(1, 0, &p, &cfg).unwrap().ratio(&op_i1(0, 0, &p, &cfg).unwrap()).re;
    assert!(r < 0.0);
    assert!((r / -(16f64).powf(-0.5) - 1.0).abs() < 0.1, "{r}");
    for (a, b) in [(1, 0), (2, 1), (0, 3), (1, 4)] {
        let x = op_i1(a, b, &p, &cfg).unwrap();
        let y = op_i1(b, a, &p, &cfg).unwrap();
        assert!((x.value().norm() / y.value().norm() - 1.0).abs() < 1e-8, "({a},{b})");
    }
    assert!(op_i1(3, 3, &p, &cfg).is_err());
    assert!(i1_asymptotic(0, 0, &cp(2.0, -1.0)).is_err());
}

#[test]
fn i1_asymptotic_closed_form() {
    let tw = tw();
    let p = cp(2.0, 9.0);
    let v = i1_asymptotic(1, 2, &p).unwrap();
    let want = -1.0 / (16.0 * std::f64::consts::PI * 9f64.powi(3)) * (-4.0 / 3.0 * 27.0f64).exp();
    assert!((v.value().re / want - 1.0).abs() < 1e-14);
    // Leading order (-1)^a (1/2) F'(h') h*^{-(a+b+1)/2}, with the tail form of F'.
    let lead = 0.5 * tail_asymptotic_pdf(9.0).unwrap() * 9f64.powf(-2.0) * -1.0;
    assert!((v.value().re / lead - 1.0).abs() < 1e-12);
    let _ = tw;
}

#[test]
fn i2_engine_matches_tensor() {
    let cfg = SeriesConfig::default();
    for (x, h) in [(0.0, 2.0), (1.0, 3.0)] {
        for n in 1..=2 {
            for m in [Moment::One, Moment::Linear, Moment::Quadratic] {
                let a = op_i2(m, n, x, 1.0, h, &cfg).unwrap();
                let b = op_i2_tensor(|xi, eta| m.eval(xi, eta), n, x, 1.0, h, &cfg).unwrap();
                assert!((a - b).norm() <= 1e-11 * b.norm(), "x = {x}, n = {n}, {m:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn derivative_series_reproduce_scaled_law() {
    let tw = tw();
    for (h, x) in [(2.0, 0.0), (3.0, 1.0)] {
        let d = derivative_representations(x, 1.0, h, 3, &SeriesConfig::default()).unwrap();
        let (f, fp, fpp) = scaled_all(&tw, h, x, 1.0).unwrap();
        assert!((d[0] - f).abs() < 1e-10, "F at h = {h}: {} vs {f}", d[0]);
        assert!((d[1] - fp).abs() < 1e-10, "F' at h = {h}: {} vs {fp}", d[1]);
        assert!((d[2] - fpp).abs() < 1e-10, "F'' at h = {h}: {} vs {fpp}", d[2]);
    }
}

#[test]
fn numerator_matches_richardson_difference() {
    let cfg = SeriesConfig::default();
    let base = cp(2.0, 9.0);
    let k = base.kernel();
    let e = 1e-3;
    let fd = |d: f64| two_point_tail(&k.shifted(d, -d), &cfg).unwrap().value;
    let d1 = (fd(e) - fd(-e)) / (2.0 * e);
    let d2 = (fd(2.0 * e) - fd(-2.0 * e)) / (4.0 * e);
    let rich = (4.0 * d1 - d2) / 3.0;
    let q = q_tilde(&base, &cfg).unwrap();
    assert!(((q.value - rich) / q.value).abs() < 1e-7, "{} vs {rich}", q.value);
    assert!(q.imag_residual <= 1e-6 * q.value.abs().max(1e-300) + 1e-300);
}

#[test]
fn conditional_tail_is_a_probability_and_monotone() {
    let cfg = SeriesConfig::default();
    let mut prev = f64::INFINITY;
    for h in [0.0, 1.0, 2.0, 3.0] {
        let t = conditional_tail(&cp(h, 9.0), &cfg).unwrap();
        assert!((0.0..=1.0).contains(&t), "h = {h}: {t}");
        assert!(t <= prev, "h = {h}: {t} after {prev}");
        prev = t;
    }
    let d = conditional_tail_detailed(&cp(2.0, 9.0), &cfg).unwrap();
    assert!((d.cdf() - (1.0 - d.tail)).abs() < 1e-15);
    let marg = -scaled_pdf(&tw(), 9.0, 0.0, 1.0).unwrap();
    assert!((d.denominator.value / marg - 1.0).abs() < 1e-8);
}

#[test]
fn conditional_law_near_the_expansion() {
    let tw = tw();
    let p = cp(2.0, 9.0);
    let c = conditional_tail_detailed(&p, &SeriesConfig::default()).unwrap();
    let pred = expansion_prediction(&p, &tw).unwrap();
    // Frozen from a converged run: cdf 0.9995014520 against prediction 0.9995624325.
    assert!((c.cdf() - 0.999_501_452_0).abs() < 1e-8, "{}", c.cdf());
    assert!((pred - 0.999_562_432_5).abs() < 1e-9, "{pred}");
    assert!((c.cdf() - pred).abs() <= 10.0 * 9f64.powf(-1.5));
}

#[test]
fn prediction_limits_and_signs() {
    let tw = tw();
    let f = scaled_cdf(&tw, 0.0, 0.0, 1.0).unwrap();
    let far = expansion_prediction(&cp(0.0, 1e12), &tw).unwrap();
    assert!((far - f).abs() < 1e-5);
    // In the bulk the F' term dominates and pulls the prediction below F.
    let near = expansion_prediction(&cp(0.0, 16.0), &tw).unwrap();
    assert!(near < f && (0.0..=1.0).contains(&near));
    assert!(expansion_prediction(&cp(0.0, -1.0), &tw).is_err());
}

#[test]
fn conditional_expansion_report_regression() {
    let tw = tw();
    let hp = [4.0, 6.25, 9.0, 12.25];
    let r = expansion_report(&cp(2.0, 4.0), &hp, &SeriesConfig::default(), &tw).unwrap();
    let want = [-0.770, -1.005, -1.015];
    for i in 0..3 {
        let s = r.fitted_slopes[i].expect("slope");
        assert!((s - want[i]).abs() < 0.01, "slope {i}: {s}");
    }
    let last = hp.len() - 1;
    assert!(r.r2[last].abs() <= r.r1[last].abs() && r.r1[last].abs() <= r.r0[last].abs());
    assert_eq!(r.slopes_within(0.3), [true, true, false]);
    // R0 has the sign of the first correction, -(3/2) sqrt(tau'/h') F'.
    assert!(r.r0.iter().all(|v| *v < 0.0));
    for i in 0..hp.len() {
        assert!((r.r1[i] - (r.r0[i] + 1.5 / hp[i].sqrt() * r.f[1])).abs() < 1e-15);
        assert!((r.r2[i] - (r.r1[i] - r.f[2] / hp[i])).abs() < 1e-15);
    }
    assert!(expansion_report(&cp(2.0, 4.0), &hp[..3], &SeriesConfig::default(), &tw).is_err());
    assert!(expansion_report(&cp(2.0, 4.0), &[4.0, 9.0, 6.25, 12.25], &SeriesConfig::default(), &tw).is_err());
}

#[test]
fn two_point_expansion_report_regression() {
    let tw = tw();
    let hp = [4.0, 6.25, 9.0, 12.25];
    let r = two_point_expansion_check(&cp(2.0, 4.0), &hp, &SeriesConfig::default(), &tw).unwrap();
    let want = [-1.018, -1.217, -1.404];
    for i in 0..3 {
        let s = r.fitted_slopes[i].expect("slope");
        assert!((s - want[i]).abs() < 0.01, "slope {i}: {s}");
    }
    // R0 carries the sign of the first correction +2 sqrt(tau'/h') F'.
    assert!(r.r0.iter().all(|v| *v > 0.0), "{:?}", r.r0);
    assert!(r.r0.iter().zip(&r.r1).all(|(a, b)| b.abs() < a.abs()));
}

#[test]
fn moment_reduces_to_i1_when_level_two_is_empty() {
    let cfg = SeriesConfig::default();
    let p = cp(2.0, 9.0);
    let empty = MomentSpec { a: 1, b: 2, alpha: vec![], beta: vec![], gamma: vec![], delta: vec![] };
    let v = i1_i2_moment(&empty, &p, &cfg).unwrap();
    let w = op_i1(1, 2, &p, &cfg).unwrap();
    assert!((v.ratio(&w).re - 1.0).abs() < 1e-14);
    // With one level-2 pair and no couplings the integral factorizes.
    let zero = MomentSpec { a: 0, b: 0, alpha: vec![0], beta: vec![0], gamma: vec![0], delta: vec![0] };
    let v = i1_i2_moment(&zero, &p, &cfg).unwrap().value().re;
    let w = op_i1(0, 0, &p, &cfg).unwrap().value().re * op_i2(Moment::One, 1, 0.0, 1.0, 2.0, &cfg).unwrap().re;
    assert!((v / w - 1.0).abs() < 1e-10, "{v} vs {w}");
}

#[test]
fn moment_bound_holds_and_tracks_the_exponential() {
    let spec = MomentSpec { a: 1, b: 1, alpha: vec![0], beta: vec![0], gamma: vec![1], delta: vec![1] };
    let grid = [cp(2.0, 9.0), cp(2.0, 16.0)];
    let r = i2_moment_bound_check(&spec, &grid, &SeriesConfig::default()).unwrap();
    assert!(r.pass, "{r:?}");
    let d = r.ln_lhs[1] - r.ln_lhs[0];
    let want = -4.0 / 3.0 * (64.0 - 27.0);
    assert!((d / want - 1.0).abs() < 0.1, "{d} vs {want}");
    let empty = MomentSpec { a: 0, b: 0, alpha: vec![], beta: vec![], gamma: vec![], delta: vec![] };
    assert!(i2_moment_bound_check(&empty, &grid, &SeriesConfig::default()).is_err());
}
