//! GUE Tracy-Widom distribution: a Nyström discretization of the Airy-kernel Fredholm
//! determinant, the Hastings-McLeod solution of Painlevé II, and the right-tail asymptotics.
//!
//! The one-point law of the fixed point at (x, tau) is the Tracy-Widom law evaluated at
//! `tau^{-1/3} h + tau^{-4/3} x^2`; see [`scaled_argument`].

use crate::airy::{airy, airy_square_moment, airy_square_tail};
use crate::error::{invalid, Error, Result};
use crate::quad::gauss_legendre;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default number of Nyström nodes.
pub const FREDHOLM_NODES: usize = 64;
/// Scale of the map `y = s + L (1 + t) / (1 - t)` compactifying [s, inf).
pub const FREDHOLM_SCALE: f64 = 10.0;
/// Default Painlevé integration window.
pub const PAINLEVE_LEFT: f64 = -10.0;
pub const PAINLEVE_RIGHT: f64 = 8.0;
const PAINLEVE_TOL: f64 = 1e-13;
const PAINLEVE_MAX_STEP: f64 = 0.01;
const BLOW_UP: f64 = 1e6;

/// Airy kernel K(x, y) = (Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y).
pub fn airy_kernel(x: f64, y: f64) -> f64 {
    if (x - y).abs() < 1e-6 {
        // K is symmetric, so its expansion about the midpoint has no first-order term.
        let m = 0.5 * (x + y);
        return airy_square_tail(m);
    }
    let (ax, bx) = airy(x);
    let (ay, by) = airy(y);
    (ax * by - bx * ay) / (x - y)
}

/// det(I - K_Ai) on L^2([s, inf)) by Nyström discretization on a mapped Gauss-Legendre grid.
pub fn fredholm_airy_cdf(s: f64, n_nodes: usize) -> Result<f64> {
    if n_nodes < 20 {
        return Err(invalid(format!("Fredholm oracle needs at least 20 nodes, got {n_nodes}")));
    }
    if !s.is_finite() {
        return Err(invalid("Fredholm argument must be finite"));
    }
    let (t, w) = gauss_legendre(n_nodes);
    let l = FREDHOLM_SCALE;
    let y: Vec<f64> = t.iter().map(|t| s + l * (1.0 + t) / (1.0 - t)).collect();
    let sw: Vec<f64> = t
        .iter()
        .zip(&w)
        .map(|(t, w)| (w * 2.0 * l / ((1.0 - t) * (1.0 - t))).sqrt())
        .collect();
    let ai: Vec<(f64, f64)> = y.iter().map(|&v| airy(v)).collect();
    let m = DMatrix::from_fn(n_nodes, n_nodes, |i, j| {
        let k = if i == j {
            ai[i].1 * ai[i].1 - y[i] * ai[i].0 * ai[i].0
        } else if (y[i] - y[j]).abs() < 1e-6 {
            airy_kernel(y[i], y[j])
        } else {
            (ai[i].0 * ai[j].1 - ai[i].1 * ai[j].0) / (y[i] - y[j])
        };
        let d = if i == j { 1.0 } else { 0.0 };
        d - sw[i] * k * sw[j]
    });
    Ok(m.determinant().clamp(0.0, 1.0))
}

/// Hastings-McLeod solution tabulated on a decreasing grid together with
/// E(x) = int_x^inf q^2 and U(x) = int_x^inf (s - x) q^2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PainleveSolution {
    pub grid: Vec<f64>,
    pub q: Vec<f64>,
    pub qprime: Vec<f64>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
}

/// Values of (q, q', E, U) at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PainleveState {
    pub q: f64,
    pub qprime: f64,
    pub e: f64,
    pub u: f64,
}

fn rhs(x: f64, y: [f64; 4]) -> [f64; 4] {
    let [q, p, e, _] = y;
    [p, 2.0 * q * q * q + x * q, -q * q, -e]
}

impl PainleveSolution {
    pub fn x_left(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn x_right(&self) -> f64 {
        self.grid[0]
    }

    /// Cubic Hermite interpolation of the tabulated solution. Arguments to the right of the
    /// grid use the Airy closed forms, which are exact up to O(Ai^3).
    pub fn at(&self, x: f64) -> Result<PainleveState> {
        if x >= self.x_right() {
            let (a, b) = airy(x);
            return Ok(PainleveState {
                q: a,
                qprime: b,
                e: airy_square_tail(x),
                u: airy_square_moment(x),
            });
        }
        if !(x >= self.x_left()) {
            return Err(Error::OutOfRange { value: x, lo: self.x_left(), hi: f64::INFINITY });
        }
        // Grid is decreasing: find i with grid[i] >= x >= grid[i + 1].
        let i = match self.grid.binary_search_by(|g| x.partial_cmp(g).unwrap()) {
            Ok(i) => i.min(self.grid.len() - 2),
            Err(i) => i - 1,
        };
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let y0 = [self.q[i], self.qprime[i], self.e[i], self.u[i]];
        let y1 = [self.q[i + 1], self.qprime[i + 1], self.e[i + 1], self.u[i + 1]];
        let d0 = rhs(x0, y0);
        let d1 = rhs(x1, y1);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let v: Vec<f64> = (0..4)
            .map(|k| h00 * y0[k] + h10 * h * d0[k] + h01 * y1[k] + h11 * h * d1[k])
            .collect();
        Ok(PainleveState { q: v[0], qprime: v[1], e: v[2], u: v[3] })
    }
}

/// Integrates (q, q', E, U) from `x_right` down to `x_left` with an adaptive
/// Dormand-Prince 5(4) method, starting from the Airy data.
pub fn painleve_solve(x_left: f64, x_right: f64, tol: f64) -> Result<PainleveSolution> {
    if !(x_right >= 6.0) {
        return Err(invalid(format!("x_right must be at least 6, got {x_right}")));
    }
    if !(x_left >= -10.0) || x_left >= x_right {
        return Err(invalid(format!("x_left must lie in [-10, x_right), got {x_left}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let (a, b) = airy(x_right);
    let mut y = [a, b, airy_square_tail(x_right), airy_square_moment(x_right)];
    let mut x = x_right;
    let mut sol = PainleveSolution {
        grid: vec![x],
        q: vec![y[0]],
        qprime: vec![y[1]],
        e: vec![y[2]],
        u: vec![y[3]],
    };
    let mut h = -1e-3;
    while x > x_left {
        if x + h < x_left {
            h = x_left - x;
        }
        let (ynew, err) = dopri5_step(x, y, h);
        let scale = y
            .iter()
            .zip(&ynew)
            .map(|(a, b)| a.abs().max(b.abs()))
            .fold(0.0, f64::max)
            .max(1e-300);
        let ratio = err / (tol * scale);
        if ratio <= 1.0 {
            x += h;
            y = ynew;
            if y[0].abs() > BLOW_UP || !y[0].is_finite() {
                return Err(Error::BlowUp { x, q: y[0].abs() });
            }
            sol.grid.push(x);
            sol.q.push(y[0]);
            sol.qprime.push(y[1]);
            sol.e.push(y[2]);
            sol.u.push(y[3]);
        }
        let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * grow).max(-PAINLEVE_MAX_STEP);
    }
    Ok(sol)
}

/// One Dormand-Prince step; returns the fifth-order solution and the max-norm error estimate.
fn dopri5_step(x: f64, y: [f64; 4], h: f64) -> ([f64; 4], f64) {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut k = [[0.0; 4]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for d in 0..4 {
                ys[d] += h * A[s][j] * kj[d];
            }
        }
        k[s] = rhs(x + C[s] * h, ys);
    }
    let mut y5 = y;
    let mut err: f64 = 0.0;
    for d in 0..4 {
        let mut e = 0.0;
        for s in 0..7 {
            y5[d] += h * B5[s] * k[s][d];
            e += h * (B5[s] - B4[s]) * k[s][d];
        }
        err = err.max(e.abs());
    }
    (y5, err)
}

/// Evaluation method of a [`TWEvaluator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwMethod {
    /// CDF from the Fredholm determinant; derivatives from F' = F E, F'' = F (E^2 - q^2).
    FredholmOracle,
    /// Everything from the Painlevé solution, F = exp(-U).
    Painleve,
    /// Leading right-tail asymptotics; only defined for s > 0.
    TailAsymptotic,
}

impl TwMethod {
    pub fn name(self) -> &'static str {
        match self {
            TwMethod::FredholmOracle => "fredholm",
            TwMethod::Painleve => "painleve",
            TwMethod::TailAsymptotic => "tail",
        }
    }
}

impl std::str::FromStr for TwMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fredholm" => Ok(TwMethod::FredholmOracle),
            "painleve" => Ok(TwMethod::Painleve),
            "tail" => Ok(TwMethod::TailAsymptotic),
            other => Err(invalid(format!("unknown method '{other}' (fredholm|painleve|tail)"))),
        }
    }
}

/// F_GUE and its first two derivatives.
#[derive(Debug, Clone)]
pub struct TWEvaluator {
    pub method: TwMethod,
    pub nodes: usize,
    pub tolerance: f64,
    painleve: PainleveSolution,
}

impl TWEvaluator {
    pub fn new(method: TwMethod) -> Result<Self> {
        Self::with_settings(method, FREDHOLM_NODES, PAINLEVE_TOL)
    }

    pub fn with_settings(method: TwMethod, nodes: usize, tolerance: f64) -> Result<Self> {
        let painleve = painleve_solve(PAINLEVE_LEFT, PAINLEVE_RIGHT, tolerance)?;
        Ok(Self { method, nodes, tolerance, painleve })
    }

    pub fn painleve(&self) -> &PainleveSolution {
        &self.painleve
    }

    fn check(&self, s: f64) -> Result<()> {
        if self.method == TwMethod::TailAsymptotic {
            if !(s > 0.0) || !s.is_finite() {
                return Err(invalid(format!("tail asymptotics need s > 0, got {s}")));
            }
        } else if !(s >= PAINLEVE_LEFT) || !s.is_finite() {
            return Err(Error::OutOfRange { value: s, lo: PAINLEVE_LEFT, hi: f64::INFINITY });
        }
        Ok(())
    }

    /// F_GUE(s).
    pub fn cdf(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        match self.method {
            TwMethod::FredholmOracle => fredholm_airy_cdf(s, self.nodes),
            TwMethod::Painleve => Ok((-self.painleve.at(s)?.u).exp()),
            TwMethod::TailAsymptotic => tail_asymptotic_cdf(s),
        }
    }

    /// F'_GUE(s).
    pub fn pdf(&self, s: f64) -> Result<f64> {
        Ok(self.all(s)?.1)
    }

    /// F''_GUE(s).
    pub fn cdf_dd(&self, s: f64) -> Result<f64> {
        Ok(self.all(s)?.2)
    }

    /// (F, F', F'') at s.
    pub fn all(&self, s: f64) -> Result<(f64, f64, f64)> {
        let f = self.cdf(s)?;
        if self.method == TwMethod::TailAsymptotic {
            let p = tail_asymptotic_pdf(s)?;
            return Ok((f, p, p * (-1.0 / s - 2.0 * s.sqrt())));
        }
        let st = self.painleve.at(s)?;
        Ok((f, f * st.e, f * (st.e * st.e - st.q * st.q)))
    }
}

/// 1 - exp(-(4/3) s^{3/2}) / (16 pi s^{3/2}).
pub fn tail_asymptotic_cdf(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid(format!("tail asymptotics need s > 0, got {s}")));
    }
    let s32 = s.powf(1.5);
    Ok(1.0 - (-4.0 / 3.0 * s32).exp() / (16.0 * PI * s32))
}

/// exp(-(4/3) s^{3/2}) / (8 pi s).
pub fn tail_asymptotic_pdf(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid(format!("tail asymptotics need s > 0, got {s}")));
    }
    Ok((-4.0 / 3.0 * s.powf(1.5)).exp() / (8.0 * PI * s))
}

/// Tracy-Widom argument of the one-point law at (x, tau): tau^{-1/3} h + tau^{-4/3} x^2.
pub fn scaled_argument(h: f64, x: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    Ok(h / tau.cbrt() + x * x / tau.powf(4.0 / 3.0))
}

/// P(H(x, tau) <= h).
pub fn scaled_cdf(tw: &TWEvaluator, h: f64, x: f64, tau: f64) -> Result<f64> {
    tw.cdf(scaled_argument(h, x, tau)?)
}

/// d/dh P(H(x, tau) <= h).
pub fn scaled_pdf(tw: &TWEvaluator, h: f64, x: f64, tau: f64) -> Result<f64> {
    Ok(tw.pdf(scaled_argument(h, x, tau)?)? / tau.cbrt())
}

/// d^2/dh^2 P(H(x, tau) <= h).
pub fn scaled_dd(tw: &TWEvaluator, h: f64, x: f64, tau: f64) -> Result<f64> {
    Ok(tw.cdf_dd(scaled_argument(h, x, tau)?)? / tau.powf(2.0 / 3.0))
}

/// (F, F', F'') of the scaled law, derivatives in h.
pub fn scaled_all(tw: &TWEvaluator, h: f64, x: f64, tau: f64) -> Result<(f64, f64, f64)> {
    let (f, p, d) = tw.all(scaled_argument(h, x, tau)?)?;
    Ok((f, p / tau.cbrt(), d / tau.powf(2.0 / 3.0)))
}
