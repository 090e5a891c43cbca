//! Basic quadrature rules and the deterministic reduction used everywhere.

use crate::error::{invalid, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p, d)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

/// Nodes z_k on |z| = radius with weights such that sum w_k f(z_k) = (1/2 pi i) \oint f dz.
pub fn circle_rule(radius: f64, nodes: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    if nodes < 8 {
        return Err(invalid(format!("circle rule needs at least 8 nodes, got {nodes}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(invalid(format!("circle radius must be positive, got {radius}")));
    }
    let n = nodes as f64;
    let z: Vec<C64> = (0..nodes)
        .map(|k| C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / n))
        .collect();
    // dz/(2 pi i) = z dtheta / (2 pi), trapezoid weight 2 pi / n.
    let w = z.iter().map(|zk| zk / n).collect();
    Ok((z, w))
}

/// Trapezoid rule for (1/2 pi i) \oint_{|z| = radius} f(z) dz.
pub fn integrate_circle<F>(f: F, radius: f64, nodes: usize) -> Result<C64>
where
    F: Fn(C64) -> C64,
{
    let (z, w) = circle_rule(radius, nodes)?;
    let terms: Vec<C64> = z.iter().zip(&w).map(|(zk, wk)| f(*zk) * wk).collect();
    Ok(pairwise_sum(&terms))
}

/// Quadrature value of (1/2 pi i) \oint (1 - z)^(n2 - k) z^(-n2 - 1) dz on |z| = 2.
pub fn z_moment_identity(n2: usize, k: usize) -> Result<C64> {
    if n2 < 1 || k > 2 * n2 {
        return Err(invalid(format!("need n2 >= 1 and 0 <= k <= 2 n2, got ({n2}, {k})")));
    }
    let e = n2 as i32 - k as i32;
    integrate_circle(
        |z| (C64::new(1.0, 0.0) - z).powi(e) * z.powi(-(n2 as i32) - 1),
        2.0,
        64,
    )
}

/// Exact value of the same contour integral, for a general integer exponent m of (1 - z)
/// and power p of z: (1/2 pi i) \oint_{|z|>1} (1 - z)^m z^p dz.
pub fn z_moment_exact(m: i64, p: i64) -> f64 {
    // Coefficient of z^{-1} in the Laurent expansion about infinity.
    if m >= 0 {
        // (1-z)^m = sum_i binom(m,i) (-1)^i z^i ; need i + p = -1.
        let i = -1 - p;
        if i < 0 || i > m {
            return 0.0;
        }
        sign(i) * binom(m as u64, i as u64)
    } else {
        // (1-z)^m = (-1)^m z^m sum_i binom(-m+i-1, i) z^{-i} ; need m - i + p = -1.
        let i = m + p + 1;
        if i < 0 {
            return 0.0;
        }
        let mm = (-m) as u64;
        sign(m) * binom(mm + i as u64 - 1, i as u64)
    }
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

/// Fixed-shape pairwise summation; the tree depends only on the length.
pub fn pairwise_sum(v: &[C64]) -> C64 {
    match v.len() {
        0 => C64::new(0.0, 0.0),
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Real counterpart of [`pairwise_sum`].
pub fn pairwise_sum_real(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum_real(&v[..mid]) + pairwise_sum_real(&v[mid..])
        }
    }
}
