#![allow(clippy::excessive_precision)]

use kpz_core::airy::{airy, airy_ai, airy_ai_prime, airy_square_moment, airy_square_tail};

// Reference values computed once with 30-digit arithmetic.
const TABLE: &[(f64, f64, f64)] = &[
    (-30.0, -0.087968188456842162833, 1.2286206026374851347),
    (-12.0, -0.066555175054373129474, 1.0231104533679707299),
    (-7.5, 0.32177571638064787527, 0.31880950669855459621),
    (-6.9, 0.10168799773976482521, -0.87103105868638740865),
    (-3.0, -0.37881429367765807435, 0.31458376921659881365),
    (-0.5, 0.4757280916105395888, -0.20408167033954738614),
    (0.7, 0.18916240039815008218, -0.19985119158228048105),
    (1.2, 0.10612576226331254864, -0.13278537855722617986),
    (3.0, 0.0065911393574607191443, -0.011912976705951318474),
    (5.5, 0.000033685311908599814425, -0.00008046339130556514338),
    (6.0, 9.9476943602528895702e-6, -0.000024765200397034954754),
    (8.0, 4.6922076160992316256e-8, -1.3414392979067865743e-7),
    (15.0, 2.164962520737992299e-18, -8.4205679540177727661e-18),
    (30.0, 3.2082175915504955711e-49, -1.7598765814327259821e-48),
];

#[test]
fn matches_reference_table() {
    for &(x, a, b) in TABLE {
        let (ca, cb) = airy(x);
        let tol = 1e-12;
        assert!(((ca - a) / a).abs() < tol, "Ai({x}) = {ca}, want {a}");
        assert!(((cb - b) / b).abs() < tol, "Ai'({x}) = {cb}, want {b}");
    }
}

#[test]
fn satisfies_airy_equation() {
    // Richardson-extrapolated second difference.
    let ai = |x: f64| airy_ai(x).unwrap();
    let d2 = |x: f64, h: f64| (ai(x + h) - 2.0 * ai(x) + ai(x - h)) / (h * h);
    for i in 0..=30 {
        let x = -6.0 + 0.4 * i as f64;
        let h = 0.01;
        let d = (4.0 * d2(x, h / 2.0) - d2(x, h)) / 3.0;
        assert!((d - x * ai(x)).abs() < 1e-9, "x = {x}: {}", d - x * ai(x));
    }
}

#[test]
fn positive_and_decreasing_on_right() {
    let mut prev = f64::INFINITY;
    for i in 0..=100 {
        let x = 0.1 * i as f64;
        let a = airy_ai(x).unwrap();
        assert!(a > 0.0 && a < prev);
        assert!(airy_ai_prime(x).unwrap() < 0.0);
        prev = a;
    }
}

#[test]
fn branches_agree_across_switch_points() {
    for &x in &[0.999999, 1.000001, -9.999999, -10.000001, 1e-9, -1e-9] {
        let (a, b) = airy(x);
        let (a2, b2) = airy(x + 2e-6 * x.signum());
        assert!((a - a2).abs() < 1e-5 && (b - b2).abs() < 1e-5);
    }
}

#[test]
fn square_integrals_have_expected_derivatives() {
    let h = 1e-4;
    for &x in &[-2.0, 0.0, 1.5, 4.0] {
        let (a, _) = airy(x);
        let d = (airy_square_tail(x + h) - airy_square_tail(x - h)) / (2.0 * h);
        assert!((d + a * a).abs() < 1e-8);
        let d = (airy_square_moment(x + h) - airy_square_moment(x - h)) / (2.0 * h);
        assert!((d + airy_square_tail(x)).abs() < 1e-8);
    }
}
