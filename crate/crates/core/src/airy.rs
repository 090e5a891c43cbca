//! Airy function Ai and its derivative on the real line.
//!
//! Four regimes: the Maclaurin series on [0, 1], the Macdonald-function integral
//! `Ai(x) = sqrt(x/3) K_{1/3}(zeta) / pi` for x > 1, Taylor continuation of the Airy
//! equation from the origin on [-10, 0), and the oscillatory asymptotic expansion below -10.
//! The Maclaurin series alone loses about four digits to cancellation near x = -6, which is
//! why the negative axis is reached by short Taylor steps instead. The positive branch is
//! evaluated in scaled form, so it is usable far beyond the public range.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Ai(0) = 3^{-2/3} / Gamma(2/3).
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// -Ai'(0) = 3^{-1/3} / Gamma(1/3).
pub const AIP0: f64 = 0.258_819_403_792_806_8;

/// Supported range of the public entry points.
pub const AIRY_RANGE: f64 = 40.0;

const SERIES_HI: f64 = 1.0;
const TAYLOR_LO: f64 = -10.0;
const TAYLOR_STEP: f64 = 0.5;

fn check(x: f64) -> Result<()> {
    if !(x.abs() <= AIRY_RANGE) {
        return Err(Error::OutOfRange { value: x, lo: -AIRY_RANGE, hi: AIRY_RANGE });
    }
    Ok(())
}

/// Ai(x) for |x| <= 40.
pub fn airy_ai(x: f64) -> Result<f64> {
    check(x)?;
    Ok(airy(x).0)
}

/// Ai'(x) for |x| <= 40.
pub fn airy_ai_prime(x: f64) -> Result<f64> {
    check(x)?;
    Ok(airy(x).1)
}

/// (Ai(x), Ai'(x)) without range checks. Underflows to zero for large positive x.
pub fn airy(x: f64) -> (f64, f64) {
    if x > SERIES_HI {
        let (a, b, z) = airy_scaled_positive(x);
        let e = (-z).exp();
        (a * e, b * e)
    } else if x >= 0.0 {
        maclaurin(x)
    } else if x >= TAYLOR_LO {
        taylor_from_origin(x)
    } else {
        oscillatory(-x)
    }
}

/// For x > 0: (Ai(x) e^{zeta}, Ai'(x) e^{zeta}, zeta) with zeta = (2/3) x^{3/2}.
pub fn airy_scaled_positive(x: f64) -> (f64, f64, f64) {
    let z = 2.0 / 3.0 * x.powf(1.5);
    if x <= SERIES_HI {
        let (a, b) = maclaurin(x);
        let e = z.exp();
        return (a * e, b * e, z);
    }
    let (k13, k23) = macdonald_scaled(z);
    let a = (x / 3.0).sqrt() * k13 / PI;
    let b = -x / (PI * 3f64.sqrt()) * k23;
    (a, b, z)
}

/// e^{z} K_{1/3}(z) and e^{z} K_{2/3}(z) from K_nu(z) = int_0^inf e^{-z cosh t} cosh(nu t) dt.
fn macdonald_scaled(z: f64) -> (f64, f64) {
    // Trapezoid on an integrand analytic in |Im t| < pi/2: error ~ exp(-pi^2 / h).
    let h = 0.08;
    let t_max = (1.0 + 60.0 / z).acosh();
    let n = (t_max / h).ceil() as usize;
    let mut s13 = 0.0;
    let mut s23 = 0.0;
    for k in 0..=n {
        let t = k as f64 * h;
        let e = (-z * (t.cosh() - 1.0)).exp();
        let w = if k == 0 { 0.5 } else { 1.0 };
        s13 += w * e * (t / 3.0).cosh();
        s23 += w * e * (2.0 * t / 3.0).cosh();
    }
    (s13 * h, s23 * h)
}

fn taylor_from_origin(x: f64) -> (f64, f64) {
    let n = (x.abs() / TAYLOR_STEP).ceil().max(1.0) as usize;
    let h = x / n as f64;
    let (mut y, mut yp) = (AI0, -AIP0);
    for k in 0..n {
        (y, yp) = taylor_step(k as f64 * h, y, yp, h);
    }
    (y, yp)
}

/// One step of y'' = x y from x0 with the local power series.
fn taylor_step(x0: f64, y: f64, yp: f64, h: f64) -> (f64, f64) {
    // c_{n+2} = (x0 c_n + c_{n-1}) / ((n + 1)(n + 2)).
    let mut c = [y, yp, 0.5 * x0 * y];
    let mut val = c[0] + c[1] * h + c[2] * h * h;
    let mut der = c[1] + 2.0 * c[2] * h;
    let mut hp = h * h;
    // Coefficients can vanish individually (at x0 = 0 every third one does), so the
    // length is fixed; |h| <= 0.5 makes 40 terms far more than enough.
    for n in 1..40 {
        let next = (x0 * c[1] + c[0]) / ((n + 1) as f64 * (n + 2) as f64);
        c = [c[1], c[2], next];
        let d = (n + 2) as f64 * next * hp;
        hp *= h;
        val += next * hp;
        der += d;
    }
    (val, der)
}

fn maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f = sum 3^k (1/3)_k x^{3k} / (3k)!, g = sum 3^k (2/3)_k x^{3k+1} / (3k+1)!.
    let mut tf = 1.0;
    let mut tg = x;
    let mut f = tf;
    let mut g = tg;
    // f' = sum_{k>=1} 3^k (1/3)_k x^{3k-1} / (3k-1)!, g' = sum 3^k (2/3)_k x^{3k} / (3k)!.
    let mut tfp = x * x / 2.0;
    let mut tgp = 1.0;
    let mut fp = tfp;
    let mut gp = tgp;
    for k in 0..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
        tg *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
        tfp *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 5.0));
        tgp *= x3 / ((3.0 * kf + 1.0) * (3.0 * kf + 3.0));
        f += tf;
        g += tg;
        fp += tfp;
        gp += tgp;
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if (tf.abs() + tg.abs() + tfp.abs() + tgp.abs()) < 1e-18 * scale && k > 3 {
            break;
        }
    }
    (AI0 * f - AIP0 * g, AI0 * fp - AIP0 * gp)
}

/// Ai(-z), Ai'(-z) for large z > 0.
fn oscillatory(z: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    // c_k = Gamma(3k + 1/2) / (54^k k! Gamma(k + 1/2)), d_k = -(6k + 1)/(6k - 1) c_k.
    let mut c = 1.0;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut pd = 0.0;
    let mut qd = 0.0;
    let mut zk = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let kf = k as f64;
        let d = if k == 0 { 1.0 } else { -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * c };
        let tc = c * zk;
        let td = d * zk;
        if tc.abs() > last {
            break;
        }
        last = tc.abs();
        let sgn = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sgn * tc;
            pd += sgn * td;
        } else {
            q += sgn * tc;
            qd += sgn * td;
        }
        if tc.abs() < 1e-17 {
            break;
        }
        c *= (3.0 * kf + 0.5) * (3.0 * kf + 1.5) * (3.0 * kf + 2.5) / (54.0 * (kf + 1.0) * (kf + 0.5));
        zk /= zeta;
    }
    let th = zeta + PI / 4.0;
    let (s, co) = th.sin_cos();
    let pre = 1.0 / (PI.sqrt() * z.powf(0.25));
    let ai = pre * (s * p - co * q);
    let aip = -z.powf(0.25) / PI.sqrt() * (co * pd + s * qd);
    (ai, aip)
}

/// int_x^inf Ai(s)^2 ds = Ai'(x)^2 - x Ai(x)^2.
pub fn airy_square_tail(x: f64) -> f64 {
    let (a, b) = airy(x);
    b * b - x * a * a
}

/// int_x^inf (s - x) Ai(s)^2 ds = (2 x^2 Ai^2 - 2 x Ai'^2 - Ai Ai') / 3.
pub fn airy_square_moment(x: f64) -> f64 {
    let (a, b) = airy(x);
    (2.0 * x * x * a * a - 2.0 * x * b * b - a * b) / 3.0
}
