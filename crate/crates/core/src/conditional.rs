//! Conditional law after a large height: the numerator Q~, the conditional tail, the
//! steepest-descent operators I1 and I2 and the residual-slope reports of the large-h'
//! expansions.
//!
//! Exponentially small masses are carried as (mantissa, log scale) pairs; ratios are formed
//! on the mantissas with the scales subtracted.

use crate::error::{invalid, Error, Result};
use crate::jet::Jet;
use crate::params::ConditionalParams;
use crate::quad::pairwise_sum;
use crate::series::{
    self, level2_series, one_point_tail, one_point_tail_derivative, single_level_grids, two_point_tail, EvalResult,
    SeriesConfig,
};
use crate::tracy_widom::{scaled_all, TWEvaluator};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A value stored as `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Factored {
    pub mantissa: C64,
    pub log_scale: f64,
}

impl Factored {
    pub fn value(&self) -> C64 {
        self.mantissa * self.log_scale.exp()
    }

    /// ln |value|, finite even when the value underflows.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// self / other with the scales combined exactly.
    pub fn ratio(&self, other: &Factored) -> C64 {
        self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp()
    }
}

fn factored(r: &EvalResult) -> Factored {
    Factored { mantissa: C64::new(r.mantissa, 0.0), log_scale: r.log_scale }
}

// ---------------------------------------------------------------------------------------
// Conditional tail

/// Q~ = (d/dh1 - d/dh2) P(H(x', tau') >= h1, H(x + x', tau + tau') >= h1 + h2) at
/// (h1, h2) = (h', h), the h'-derivative of the joint tail at fixed upper threshold.
pub fn q_tilde(params: &ConditionalParams, config: &SeriesConfig) -> Result<EvalResult> {
    params.validate()?;
    series::series_value(&params.kernel(), config, series::Probe::TILDE)
}

/// Conditional tail with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalResult {
    /// P(H(x + x', tau + tau') - H(x', tau') >= h | H(x', tau') = h').
    pub tail: f64,
    /// Q~ in factored form.
    pub numerator: EvalResult,
    /// d/dh' P(H(x', tau') >= h') = -F'(h'; x', tau') in factored form.
    pub denominator: EvalResult,
    /// Propagated quadrature error estimate of `tail`.
    pub quad_error_est: f64,
    /// Propagated truncation bound of `tail`.
    pub truncation_bound: f64,
}

impl ConditionalResult {
    /// The conditional distribution function 1 - tail.
    pub fn cdf(&self) -> f64 {
        1.0 - self.tail
    }
}

pub fn conditional_tail_detailed(params: &ConditionalParams, config: &SeriesConfig) -> Result<ConditionalResult> {
    let num = q_tilde(params, config)?;
    let den_cfg = SeriesConfig { n1_max: config.n1_max.max(3), ..*config };
    let den = one_point_tail_derivative(params.xp, params.taup, params.hp, &den_cfg)?;
    if den.mantissa == 0.0 {
        return Err(Error::Precondition("density of H(x', tau') vanished".into()));
    }
    let (n, d) = (factored(&num), factored(&den));
    let tail = n.ratio(&d).re;
    // Relative errors are formed as e / |value| in log space to avoid underflow.
    let rel_q = (num.quad_error_est.ln() - n.ln_abs()).exp();
    let rel_d = (den.quad_error_est.ln() - d.ln_abs()).exp();
    let rel_t = (num.truncation_bound.ln() - n.ln_abs()).exp();
    Ok(ConditionalResult {
        tail,
        quad_error_est: tail.abs() * (rel_q + rel_d),
        truncation_bound: tail.abs() * rel_t,
        numerator: num,
        denominator: den,
    })
}

/// P(H(x + x', tau + tau') - H(x', tau') >= h | H(x', tau') = h') = Q~ / (-F'(h'; x', tau')).
pub fn conditional_tail(params: &ConditionalParams, config: &SeriesConfig) -> Result<f64> {
    Ok(conditional_tail_detailed(params, config)?.tail)
}

// ---------------------------------------------------------------------------------------
// I1

fn check_ab(a: i32, b: i32) -> Result<()> {
    if a.abs() + b.abs() > 5 {
        return Err(invalid(format!("need |a| + |b| <= 5, got ({a}, {b})")));
    }
    Ok(())
}

fn check_h_star(params: &ConditionalParams) -> Result<f64> {
    params.validate()?;
    let hs = params.h_star();
    if !(hs > 0.0) {
        return Err(Error::Precondition(format!("h* must be positive, got {hs}")));
    }
    Ok(hs)
}

/// Level-1 nodes of I1 in centred variables: positions, weight times f (scaled) and the
/// log scale.
#[allow(clippy::type_complexity)]
fn i1_nodes(params: &ConditionalParams, config: &SeriesConfig) -> Result<(Vec<(C64, C64)>, Vec<(C64, C64)>, f64)> {
    let hs = check_h_star(params)?;
    let (tau, h) = (params.taup, params.taup * hs);
    let (l, r, kappa) = single_level_grids(0.0, tau, h, config.level1_nodes, config.tail_tol, &config.layout)?;
    let side = |g: &crate::contour::QuadratureGrid| -> Vec<(C64, C64)> {
        g.nodes
            .iter()
            .zip(&g.weights)
            .map(|(z, w)| (*z, w * (series::f_exponent(*z, 0.0, tau, h) + 0.5 * kappa).exp()))
            .collect()
    };
    Ok((side(&l), side(&r), -kappa))
}

/// I1[xi^{-a} eta^{-b}] = \int_{Gamma_L} \int_{Gamma_R} e^{m(xi) - m(eta)} (xi - eta)^{-2}
/// xi^{-a} eta^{-b}, with m(z) = -tau' z^3/3 + tau' h* z and dz/(2 pi i) measures, on rays
/// through the saddles ∓sqrt(h*).
pub fn op_i1(a: i32, b: i32, params: &ConditionalParams, config: &SeriesConfig) -> Result<Factored> {
    check_ab(a, b)?;
    let (l, r, ls) = i1_nodes(params, config)?;
    let rows: Vec<C64> = l
        .par_iter()
        .map(|(xi, wx)| {
            let v: Vec<C64> = r
                .iter()
                .map(|(eta, we)| {
                    let d = xi - eta;
                    wx * we / (d * d) * xi.powi(-a) * eta.powi(-b)
                })
                .collect();
            pairwise_sum(&v)
        })
        .collect();
    Ok(Factored { mantissa: pairwise_sum(&rows), log_scale: ls })
}

/// (-1)^a / (16 pi tau' h*^{(a+b+3)/2}) e^{-(4/3) tau' h*^{3/2}}.
pub fn i1_asymptotic(a: i32, b: i32, params: &ConditionalParams) -> Result<Factored> {
    check_ab(a, b)?;
    let hs = check_h_star(params)?;
    let sign = if a.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let m = sign / (16.0 * PI * params.taup * hs.powf((a + b + 3) as f64 / 2.0));
    Ok(Factored { mantissa: C64::new(m, 0.0), log_scale: -4.0 / 3.0 * params.taup * hs.powf(1.5) })
}

// ---------------------------------------------------------------------------------------
// I2

/// Moments inserted into I2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Moment {
    /// 1.
    One,
    /// sum_i (xi_i - eta_i).
    Linear,
    /// (sum_i (xi_i - eta_i))^2.
    Quadratic,
}

impl Moment {
    fn order(self) -> usize {
        match self {
            Moment::One => 0,
            Moment::Linear => 1,
            Moment::Quadratic => 2,
        }
    }

    pub fn eval(self, xi: &[C64], eta: &[C64]) -> C64 {
        let s: C64 = xi.iter().zip(eta).map(|(a, b)| a - b).sum();
        match self {
            Moment::One => ONE,
            Moment::Linear => s,
            Moment::Quadratic => s * s,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn alt(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// I2[moment] = \int C(xi; eta)^2 prod f(xi_i) f(eta_i) moment over n2 variables on each of
/// the out contours at (x, tau, h), through the matrix engine.
pub fn op_i2(moment: Moment, n2: usize, x: f64, tau: f64, h: f64, config: &SeriesConfig) -> Result<C64> {
    if n2 < 1 {
        return Err(invalid("n2 must be at least 1"));
    }
    let jets = level2_series(x, tau, h, n2, moment.order(), config)?;
    Ok(jets[n2].derivative(moment.order()) * alt(n2) * factorial(n2).powi(2))
}

/// [`op_i2`] by direct tensor quadrature of the product formula, for an arbitrary moment.
pub fn op_i2_tensor<G>(moment: G, n2: usize, x: f64, tau: f64, h: f64, config: &SeriesConfig) -> Result<C64>
where
    G: Fn(&[C64], &[C64]) -> C64 + Sync,
{
    if n2 < 1 {
        return Err(invalid("n2 must be at least 1"));
    }
    let (x, h) = (0.0, series::centred_height(x, tau, h));
    let (l, r, _) = single_level_grids(x, tau, h, config.level2_nodes, config.tail_tol, &config.layout)?;
    let pts = |g: &crate::contour::QuadratureGrid| -> Vec<(C64, C64)> {
        g.nodes.iter().zip(&g.weights).map(|(z, w)| (*z, w * series::f_exponent(*z, x, tau, h).exp())).collect()
    };
    let (lp, rp) = (pts(&l), pts(&r));
    let required = ((lp.len() * rp.len()) as f64).powi(n2 as i32);
    if required > config.budget {
        return Err(Error::BudgetExceeded { dimension: 2 * n2, required, budget: config.budget });
    }
    let m = lp.len();
    let inner: usize = (0..(2 * n2 - 1)).map(|k| if k < n2 - 1 { m } else { rp.len() }).product();
    let partial: Vec<C64> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; 2 * n2];
            idx[0] = i0;
            let mut acc = Vec::with_capacity(inner);
            let mut xi = vec![ONE; n2];
            let mut eta = vec![ONE; n2];
            for _ in 0..inner {
                let mut w = ONE;
                for k in 0..n2 {
                    xi[k] = lp[idx[k]].0;
                    w *= lp[idx[k]].1;
                    eta[k] = rp[idx[n2 + k]].0;
                    w *= rp[idx[n2 + k]].1;
                }
                let c = crate::cauchy::cauchy_factor(&xi, &eta).unwrap_or(C64::new(0.0, 0.0));
                acc.push(w * c * c * moment(&xi, &eta));
                for k in (1..2 * n2).rev() {
                    idx[k] += 1;
                    let dim = if k < n2 { m } else { rp.len() };
                    if idx[k] < dim {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            pairwise_sum(&acc)
        })
        .collect();
    Ok(pairwise_sum(&partial))
}

/// F, F' and F'' at (h; x, tau) from the series 1 + sum_{n <= n2_max} (-1)^n/(n!)^2 I2[moment].
pub fn derivative_representations(x: f64, tau: f64, h: f64, n2_max: usize, config: &SeriesConfig) -> Result<[f64; 3]> {
    if n2_max < 1 {
        return Err(invalid("n2_max must be at least 1"));
    }
    let jets: Vec<Jet> = level2_series(x, tau, h, n2_max, 2, config)?;
    let sum = |k: usize| jets.iter().map(|j| j.derivative(k).re).sum::<f64>();
    Ok([sum(0), sum(1), sum(2)])
}

// ---------------------------------------------------------------------------------------
// Expansions

/// F(h; x, tau) - (3/2) sqrt(tau'/h') F' + (tau'/h') F'', the prediction for the conditional
/// distribution function.
pub fn expansion_prediction(params: &ConditionalParams, tw: &TWEvaluator) -> Result<f64> {
    params.validate()?;
    if !(params.hp > 0.0) {
        return Err(invalid(format!("h' must be positive, got {}", params.hp)));
    }
    let (f, fp, fpp) = scaled_all(tw, params.h, params.x, params.tau)?;
    let r = params.taup / params.hp;
    Ok(f - 1.5 * r.sqrt() * fp + r * fpp)
}

/// Which large-h' expansion a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionKind {
    /// Conditional distribution function: F - (3/2) sqrt(tau'/h') F' + (tau'/h') F''.
    Conditional,
    /// Joint over marginal tail: (1 - F) + 2 sqrt(tau'/h') F' - 2 (tau'/h') F''.
    TwoPoint,
}

impl ExpansionKind {
    /// Coefficients of sqrt(tau'/h') F' and (tau'/h') F'' in the prediction.
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            ExpansionKind::Conditional => (-1.5, 1.0),
            ExpansionKind::TwoPoint => (2.0, -2.0),
        }
    }
}

pub const SLOPE_TARGETS: [f64; 3] = [-0.5, -1.0, -1.5];

/// Residuals of successive truncations of an expansion, with least-squares slopes of
/// log |R_i| against log h'.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub kind: ExpansionKind,
    pub hp_samples: Vec<f64>,
    /// Conditional distribution function (Conditional) or joint/marginal ratio (TwoPoint).
    pub conditional_values: Vec<f64>,
    /// Quadrature error estimate plus truncation bound of each value.
    pub value_errors: Vec<f64>,
    pub r0: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// R_i whose magnitude is below 10 times the value error.
    pub noise_limited: [Vec<bool>; 3],
    pub fitted_slopes: [Option<f64>; 3],
    pub slope_targets: [f64; 3],
    /// F, F', F'' at (h; x, tau).
    pub f: [f64; 3],
}

impl ExpansionReport {
    /// Slopes within `tol` of their targets; a missing slope fails.
    pub fn slopes_within(&self, tol: f64) -> [bool; 3] {
        std::array::from_fn(|i| self.fitted_slopes[i].is_some_and(|s| (s - self.slope_targets[i]).abs() <= tol))
    }
}

/// Least-squares slope of ln|y| against ln x over the unmasked entries; None with fewer
/// than two.
pub fn fit_log_slope(x: &[f64], y: &[f64], mask: &[bool]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .zip(mask)
        .filter(|(_, m)| !**m)
        .filter(|((_, y), _)| **y != 0.0 && y.is_finite())
        .map(|((x, y), _)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn check_hp_list(hp_list: &[f64]) -> Result<()> {
    if hp_list.len() < 4 {
        return Err(invalid(format!("need at least 4 h' samples, got {}", hp_list.len())));
    }
    if hp_list.windows(2).any(|w| !(w[1] > w[0])) || !(hp_list[0] > 0.0) {
        return Err(invalid("h' samples must be positive and increasing"));
    }
    Ok(())
}

fn assemble(
    kind: ExpansionKind,
    base: &ConditionalParams,
    hp_list: &[f64],
    values: Vec<(f64, f64)>,
    tw: &TWEvaluator,
) -> Result<ExpansionReport> {
    let (f, fp, fpp) = scaled_all(tw, base.h, base.x, base.tau)?;
    let (c1, c2) = kind.coefficients();
    let lead = match kind {
        ExpansionKind::Conditional => f,
        ExpansionKind::TwoPoint => 1.0 - f,
    };
    let mut r = [vec![], vec![], vec![]];
    let mut noise = [vec![], vec![], vec![]];
    for (hp, (v, err)) in hp_list.iter().zip(&values) {
        let q = base.taup / hp;
        let r0 = v - lead;
        let r1 = r0 - c1 * q.sqrt() * fp;
        let r2 = r1 - c2 * q * fpp;
        for (i, ri) in [r0, r1, r2].into_iter().enumerate() {
            r[i].push(ri);
            noise[i].push(ri.abs() < 10.0 * err);
        }
    }
    let fitted_slopes = std::array::from_fn(|i| fit_log_slope(hp_list, &r[i], &noise[i]));
    let [r0, r1, r2] = r;
    Ok(ExpansionReport {
        kind,
        hp_samples: hp_list.to_vec(),
        conditional_values: values.iter().map(|v| v.0).collect(),
        value_errors: values.iter().map(|v| v.1).collect(),
        r0,
        r1,
        r2,
        noise_limited: noise,
        fitted_slopes,
        slope_targets: SLOPE_TARGETS,
        f: [f, fp, fpp],
    })
}

/// Conditional distribution function over `hp_list` with its residuals against the
/// expansion F - (3/2) sqrt(tau'/h') F' + (tau'/h') F''.
pub fn expansion_report(
    base: &ConditionalParams,
    hp_list: &[f64],
    config: &SeriesConfig,
    tw: &TWEvaluator,
) -> Result<ExpansionReport> {
    check_hp_list(hp_list)?;
    let values = hp_list
        .iter()
        .map(|hp| {
            let c = conditional_tail_detailed(&base.with_hp(*hp), config)?;
            Ok((c.cdf(), c.quad_error_est + c.truncation_bound))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(ExpansionKind::Conditional, base, hp_list, values, tw)
}

/// Joint tail over marginal tail, joint = P(H(x', tau') >= h', H(x + x', tau + tau') >= h + h').
pub struct TwoPointRatio {
    pub ratio: f64,
    pub error: f64,
}

pub fn two_point_ratio(params: &ConditionalParams, config: &SeriesConfig) -> Result<TwoPointRatio> {
    params.validate()?;
    let joint = two_point_tail(&params.kernel(), config)?;
    let marg = one_point_tail(params.xp, params.taup, params.hp, &SeriesConfig { n1_max: config.n1_max.max(3), ..*config })?;
    let (j, m) = (factored(&joint), factored(&marg));
    let ratio = j.ratio(&m).re;
    let rel = |e: f64, f: &Factored| if e > 0.0 { (e.ln() - f.ln_abs()).exp() } else { 0.0 };
    let error = ratio.abs()
        * (rel(joint.quad_error_est + joint.truncation_bound, &j) + rel(marg.quad_error_est + marg.truncation_bound, &m));
    Ok(TwoPointRatio { ratio, error })
}

/// As [`expansion_report`] for the ratio of the two-point tail to the one-point tail, with
/// the expansion (1 - F) + 2 sqrt(tau'/h') F' - 2 (tau'/h') F''.
pub fn two_point_expansion_check(
    base: &ConditionalParams,
    hp_list: &[f64],
    config: &SeriesConfig,
    tw: &TWEvaluator,
) -> Result<ExpansionReport> {
    check_hp_list(hp_list)?;
    let values = hp_list
        .iter()
        .map(|hp| {
            let r = two_point_ratio(&base.with_hp(*hp), config)?;
            Ok((r.ratio, r.error))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(ExpansionKind::TwoPoint, base, hp_list, values, tw)
}

// ---------------------------------------------------------------------------------------
// Moment bound for I1[I2[...]]

/// Multi-index data of the moment bound: level-1 powers xi1^{-a} eta1^{-b}, level-2 powers
/// xi2_i^{alpha_i} eta2_i^{beta_i} and couplings (xi1 - xi2_i)^{-gamma_i}, (eta1 - eta2_i)^{-delta_i}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub a: i32,
    pub b: i32,
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub gamma: Vec<u32>,
    pub delta: Vec<u32>,
}

impl MomentSpec {
    pub fn n2(&self) -> usize {
        self.alpha.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n2();
        if self.beta.len() != n || self.gamma.len() != n || self.delta.len() != n {
            return Err(invalid("alpha, beta, gamma and delta must share one length n2"));
        }
        if self.alpha.iter().chain(&self.beta).any(|v| *v > 5) {
            return Err(invalid("alpha_i and beta_i must be at most 5"));
        }
        check_ab(self.a, self.b)
    }

    /// Exponent of h* in the envelope: -(a + b)/2 - |gamma| - |delta|.
    pub fn h_power(&self) -> f64 {
        -(self.a + self.b) as f64 / 2.0 - self.gamma.iter().sum::<u32>() as f64 - self.delta.iter().sum::<u32>() as f64
    }
}

/// I1[I2[xi1^{-a} eta1^{-b} prod xi2_i^{alpha_i} eta2_i^{beta_i} (xi1 - xi2_i)^{-gamma_i}
/// (eta1 - eta2_i)^{-delta_i}]] by tensor quadrature, level 1 on the saddle rays of h* in
/// centred variables and level 2 on the out contours of (h; x, tau).
pub fn i1_i2_moment(spec: &MomentSpec, params: &ConditionalParams, config: &SeriesConfig) -> Result<Factored> {
    spec.validate()?;
    let n2 = spec.n2();
    let (l1, r1, ls) = i1_nodes(params, config)?;
    let (x, tau, h) = (params.x, params.tau, params.h);
    let (l, r, _) = single_level_grids(x, tau, h, config.level2_nodes, config.tail_tol, &config.layout)?;
    let outer = config.layout.single(0.0, params.taup, params.taup * params.h_star());
    if n2 > 0 && !(outer > config.layout.single(x, tau, h)) {
        return Err(Error::Precondition("level-1 contour must lie outside the level-2 out contours".into()));
    }
    let pts = |g: &crate::contour::QuadratureGrid| -> Vec<(C64, C64)> {
        g.nodes.iter().zip(&g.weights).map(|(z, w)| (*z, w * series::f_exponent(*z, x, tau, h).exp())).collect()
    };
    let (lp, rp) = (pts(&l), pts(&r));
    let (m, k) = (lp.len(), rp.len());
    let required = (l1.len() * r1.len()) as f64 * ((m * k) as f64).powi(n2 as i32);
    if required > config.budget {
        return Err(Error::BudgetExceeded { dimension: 2 + 2 * n2, required, budget: config.budget });
    }
    let inner_dims: Vec<usize> = (0..2 * n2).map(|i| if i < n2 { m } else { k }).collect();
    let inner: usize = inner_dims.iter().product();
    let rows: Vec<C64> = l1
        .par_iter()
        .map(|(xi1, w1)| {
            let mut out = Vec::with_capacity(r1.len());
            for (eta1, v1) in &r1 {
                let d = xi1 - eta1;
                let base = w1 * v1 / (d * d) * xi1.powi(-spec.a) * eta1.powi(-spec.b);
                let mut idx = vec![0usize; 2 * n2];
                let mut acc = Vec::with_capacity(inner);
                let mut xi = vec![ONE; n2];
                let mut eta = vec![ONE; n2];
                for _ in 0..inner {
                    let mut w = ONE;
                    for i in 0..n2 {
                        let (p, wp) = lp[idx[i]];
                        let (q, wq) = rp[idx[n2 + i]];
                        xi[i] = p;
                        eta[i] = q;
                        w *= wp * wq * p.powu(spec.alpha[i]) * q.powu(spec.beta[i])
                            / ((xi1 - p).powu(spec.gamma[i]) * (eta1 - q).powu(spec.delta[i]));
                    }
                    let c = crate::cauchy::cauchy_factor(&xi, &eta).unwrap_or(C64::new(0.0, 0.0));
                    acc.push(w * c * c);
                    for j in (0..2 * n2).rev() {
                        idx[j] += 1;
                        if idx[j] < inner_dims[j] {
                            break;
                        }
                        idx[j] = 0;
                    }
                }
                out.push(base * pairwise_sum(&acc));
            }
            pairwise_sum(&out)
        })
        .collect();
    Ok(Factored { mantissa: pairwise_sum(&rows), log_scale: ls })
}

/// Envelope check of the I1[I2] moment bound over a grid of h*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBoundReport {
    pub h_star: Vec<f64>,
    /// ln |I1[I2[...]]| at each grid point.
    pub ln_lhs: Vec<f64>,
    /// ln of the envelope with the calibrated c.
    pub ln_envelope: Vec<f64>,
    pub calibrated_c: f64,
    pub pass: bool,
}

/// Compares |I1[I2[...]]| with c^{n2} n2^{n2} h*^{-(a+b)/2 - |gamma| - |delta|} e^{-(4/3) tau' h*^{3/2}},
/// c calibrated at the smallest h* of `grid` and held fixed for the others.
pub fn i2_moment_bound_check(spec: &MomentSpec, grid: &[ConditionalParams], config: &SeriesConfig) -> Result<MomentBoundReport> {
    if grid.is_empty() {
        return Err(invalid("parameter grid is empty"));
    }
    if spec.n2() == 0 {
        return Err(invalid("the moment bound needs n2 >= 1"));
    }
    let n2 = spec.n2() as f64;
    let mut h_star = Vec::new();
    let mut ln_lhs = Vec::new();
    let mut ln_base = Vec::new();
    for p in grid {
        let hs = check_h_star(p)?;
        let v = i1_i2_moment(spec, p, config)?;
        h_star.push(hs);
        ln_lhs.push(v.ln_abs());
        ln_base.push(n2 * n2.ln() + spec.h_power() * hs.ln() - 4.0 / 3.0 * p.taup * hs.powf(1.5));
    }
    let i0 = (0..h_star.len()).min_by(|a, b| h_star[*a].total_cmp(&h_star[*b])).unwrap_or(0);
    let ln_c = (ln_lhs[i0] - ln_base[i0]) / n2;
    let ln_envelope: Vec<f64> = ln_base.iter().map(|b| b + n2 * ln_c).collect();
    let pass = ln_lhs.iter().zip(&ln_envelope).all(|(l, e)| *l <= *e + 1e-12);
    Ok(MomentBoundReport { h_star, ln_lhs, ln_envelope, calibrated_c: ln_c.exp(), pass })
}
