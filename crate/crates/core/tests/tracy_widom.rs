use kpz_core::tracy_widom::*;
use std::f64::consts::PI;

// F_GUE from an independent Nyström discretization (plain Gauss-Legendre on [s, s + 24],
// 140 and 180 nodes, SciPy Airy functions); both resolutions agree to about 1e-14.
const REFERENCE: &[(f64, f64)] = &[
    (-6.0, 1.062_254_674_2e-8),
    (-4.0, 0.003_544_553_595_510),
    (-3.5, 0.020_967_691_492_766),
    (-2.0, 0.413_224_142_505_10),
    (-1.0, 0.807_214_241_999_27),
    (0.0, 0.969_372_828_355_26),
    (1.0, 0.997_505_438_149_389),
    (2.0, 0.999_887_553_698_309),
    (3.0, 0.999_997_005_956_608),
    (4.0, 0.999_999_950_420_879),
    (6.0, 0.999_999_999_996_183),
];

fn tw() -> TWEvaluator {
    TWEvaluator::new(TwMethod::FredholmOracle).unwrap()
}

#[test]
fn fredholm_matches_reference_table() {
    for &(s, want) in REFERENCE {
        let got = fredholm_airy_cdf(s, FREDHOLM_NODES).unwrap();
        assert!((got - want).abs() < 1e-11, "s = {s}: {got} vs {want}");
    }
}

#[test]
fn fredholm_node_count_is_converged() {
    for &s in &[-6.0, -2.0, 0.0, 3.0] {
        let a = fredholm_airy_cdf(s, 40).unwrap();
        let b = fredholm_airy_cdf(s, 96).unwrap();
        assert!((a - b).abs() < 1e-10, "s = {s}: {a} vs {b}");
    }
    assert!(fredholm_airy_cdf(0.0, 19).is_err());
}

#[test]
fn fredholm_limits() {
    assert!((fredholm_airy_cdf(10.0, FREDHOLM_NODES).unwrap() - 1.0).abs() < 1e-10);
    let got = 1.0 - fredholm_airy_cdf(8.0, FREDHOLM_NODES).unwrap();
    let asym = (-4.0 / 3.0 * 8f64.powf(1.5)).exp() / (16.0 * PI * 8f64.powf(1.5));
    // At s = 8 the complement is ~1e-17, below double resolution of F itself.
    assert!(got.abs() <= 2.0 * f64::EPSILON + 1.03 * asym);
}

#[test]
fn painleve_initial_data_and_shape() {
    let sol = painleve_solve(PAINLEVE_LEFT, PAINLEVE_RIGHT, 1e-13).unwrap();
    let ai = kpz_core::airy::airy_ai(PAINLEVE_RIGHT).unwrap();
    assert_eq!(sol.q[0] / ai, 1.0);
    for w in sol.grid.windows(2) {
        assert!(w[1] < w[0]);
    }
    for i in 1..sol.grid.len() {
        assert!(sol.e[i] >= sol.e[i - 1] && sol.e[i] >= 0.0);
        assert!(sol.u[i] >= sol.u[i - 1] && sol.u[i] >= 0.0);
    }
    assert!((-sol.u.last().unwrap()).exp() < 1e-30);
}

#[test]
fn painleve_rejects_bad_windows() {
    assert!(painleve_solve(-10.0, 5.0, 1e-10).is_err());
    assert!(painleve_solve(-11.0, 8.0, 1e-10).is_err());
    assert!(painleve_solve(-5.0, 8.0, 0.0).is_err());
}

#[test]
fn fredholm_and_painleve_agree() {
    let p = TWEvaluator::new(TwMethod::Painleve).unwrap();
    for i in 0..=20 {
        let s = -6.0 + 0.6 * i as f64;
        let a = fredholm_airy_cdf(s, FREDHOLM_NODES).unwrap();
        let b = p.cdf(s).unwrap();
        assert!((a - b).abs() < 1e-6, "s = {s}: {a} vs {b}");
    }
}

#[test]
fn q_matches_fredholm_second_derivative() {
    // q^2 = (F'/F)^2 - F''/F with F', F'' from Richardson-extrapolated differences.
    let f = |s: f64| fredholm_airy_cdf(s, FREDHOLM_NODES).unwrap();
    let d1 = |s: f64, h: f64| (f(s + h) - f(s - h)) / (2.0 * h);
    let d2 = |s: f64, h: f64| (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
    let s = -2.0;
    let h = 2e-2;
    let fp = (4.0 * d1(s, h / 2.0) - d1(s, h)) / 3.0;
    let fpp = (4.0 * d2(s, h / 2.0) - d2(s, h)) / 3.0;
    let q_fd = ((fp / f(s)).powi(2) - fpp / f(s)).sqrt();
    let sol = tw();
    let q = sol.painleve().at(s).unwrap().q;
    assert!((q - q_fd).abs() < 1e-4, "{q} vs {q_fd}");
}

#[test]
fn derivatives_match_finite_differences() {
    let e = tw();
    let f = |s: f64| e.cdf(s).unwrap();
    let h = 1e-3;
    for i in 0..=20 {
        let s = -5.0 + 0.5 * i as f64;
        let (_, p, d) = e.all(s).unwrap();
        let fd1 = (f(s + h) - f(s - h)) / (2.0 * h);
        let fd2 = (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h);
        assert!((p - fd1).abs() < 1e-5, "F' at {s}: {p} vs {fd1}");
        assert!((d - fd2).abs() < 1e-5, "F'' at {s}: {d} vs {fd2}");
    }
}

#[test]
fn density_is_normalized_and_cdf_monotone() {
    let e = tw();
    let (x, w) = kpz_core::quad::gauss_legendre_on(200, -10.0, 10.0);
    let total: f64 = x.iter().zip(&w).map(|(s, w)| e.pdf(*s).unwrap() * w).sum();
    assert!((total - 1.0).abs() < 1e-6, "{total}");
    let mut last = 0.0;
    for i in 0..=80 {
        let s = -8.0 + 0.2 * i as f64;
        let v = e.cdf(s).unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert!(v >= last);
        assert!(e.pdf(s).unwrap() >= -1e-10);
        last = v;
    }
}

#[test]
fn tail_formulas() {
    let want = (-32.0f64 / 3.0).exp() / (32.0 * PI);
    assert!((tail_asymptotic_pdf(4.0).unwrap() - want).abs() < 1e-18);
    assert!(tail_asymptotic_pdf(0.0).is_err());
    assert!(tail_asymptotic_cdf(-1.0).is_err());
    let t = TWEvaluator::new(TwMethod::TailAsymptotic).unwrap();
    assert!(t.cdf(-1.0).is_err());
    assert_eq!(t.cdf(8.0).unwrap(), tail_asymptotic_cdf(8.0).unwrap());
}

#[test]
fn tail_ratios_approach_one() {
    let e = tw();
    let mut last = f64::INFINITY;
    for &s in &[4.0, 6.0, 8.0] {
        let r = (e.pdf(s).unwrap() / tail_asymptotic_pdf(s).unwrap() - 1.0).abs();
        assert!(r < last, "s = {s}: {r}");
        last = r;
    }
    assert!(last <= 0.03, "{last}");
}

#[test]
fn scaled_law_identities() {
    let e = tw();
    for &h in &[-1.0, 0.5, 2.0] {
        assert_eq!(scaled_cdf(&e, h, 0.0, 1.0).unwrap(), e.cdf(h).unwrap());
    }
    for &(s, x, tau) in &[(-1.0f64, 1.0f64, 2.0f64), (0.5, -0.7, 0.5), (1.5, 2.0, 3.0)] {
        let h = tau.cbrt() * s - x * x / tau;
        let got = scaled_cdf(&e, h, x, tau).unwrap();
        assert!((got - e.cdf(s).unwrap()).abs() < 1e-13, "{s} {x} {tau}");
    }
    let (h, x, tau) = (0.3, 0.8, 1.7);
    let d = 1e-4;
    let fd = (scaled_cdf(&e, h + d, x, tau).unwrap() - scaled_cdf(&e, h - d, x, tau).unwrap()) / (2.0 * d);
    assert!((fd - scaled_pdf(&e, h, x, tau).unwrap()).abs() < 1e-6);
    let fdd = (scaled_pdf(&e, h + d, x, tau).unwrap() - scaled_pdf(&e, h - d, x, tau).unwrap()) / (2.0 * d);
    assert!((fdd - scaled_dd(&e, h, x, tau).unwrap()).abs() < 1e-6);
    assert!(scaled_cdf(&e, 0.0, 0.0, 0.0).is_err());
}
