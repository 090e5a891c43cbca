//! Series kernels T and T~, and the one- and two-point tail probabilities.
//!
//! The determinantal sums are evaluated on quadrature grids in matrix form. With rows
//! (xi1, eta2) and columns (eta1, xi2) the discretized series over (n1, n2) is the
//! generating function of a single Fredholm determinant det(I + K0 W), where
//! `K0(r, c) = 1 / (r - c)` and W carries the weights, the f factors and one Cauchy entry
//! per (xi, eta) pair. Coefficients of `s^{n1} t^{n2}` are extracted with
//!
//! ```text
//! det(I + M) = det(I + t d) det(I + s G(t)),   G(t) = a - t b (I + t d)^{-1} c,
//! ```
//!
//! trace power sums and a truncated bivariate exponential. The block entries are jets in
//! an auxiliary parameter, which yields the derivatives in h1 and h2 exactly.

use crate::bounds;
use crate::cauchy::{cauchy_factor, delta_cross};
use crate::contour::{ray_quadrature_weighted, ContourFamily, Family, Layout, QuadratureGrid, RayContour};
use crate::error::{invalid, Error, Result};
use crate::jet::{Jet, JetMatrix};
use crate::params::KernelParams;
use crate::quad::{circle_rule, pairwise_sum};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Level-1 height from which the two-point routines switch to the z-integrated n1 = 1
/// channel when the route is [`Route::Auto`].
pub const DOMINANT_THRESHOLD: f64 = 4.0;

/// Default cap on kernel evaluations of a single tensor quadrature.
pub const DEFAULT_BUDGET: f64 = 1e9;

/// Largest (n1, n2) index included in envelope tail sums.
pub const ENVELOPE_HORIZON: usize = 50;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncationMode {
    Fixed,
    BoundCertified,
}

/// How the z integral of the two-point series is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// [`Route::Dominant`] for h1 >= [`DOMINANT_THRESHOLD`], otherwise [`Route::Circle`].
    Auto,
    /// Trapezoid rule on |z| = z_radius over the nested contour family.
    Circle,
    /// Exact z integral of the n1 = 1 channel; n1 >= 2 is covered by the envelope bound.
    Dominant,
}

/// Discretization and truncation settings of the series evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    pub n1_max: usize,
    pub n2_max: usize,
    pub z_radius: f64,
    pub z_nodes: usize,
    /// Nodes per ray on level-1 contours.
    pub level1_nodes: usize,
    /// Nodes per ray on level-2 contours.
    pub level2_nodes: usize,
    pub tail_tol: f64,
    pub truncation_mode: TruncationMode,
    pub route: Route,
    pub layout: Layout,
    pub epsilon: f64,
    /// Maximum number of kernel evaluations for one tensor quadrature.
    pub budget: f64,
    /// Re-run on coarser grids to estimate the quadrature error.
    pub estimate_error: bool,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            n1_max: 2,
            n2_max: 2,
            z_radius: 2.0,
            z_nodes: 64,
            level1_nodes: 32,
            level2_nodes: 24,
            tail_tol: 1e-18,
            truncation_mode: TruncationMode::BoundCertified,
            route: Route::Auto,
            layout: Layout::default(),
            epsilon: 0.1,
            budget: DEFAULT_BUDGET,
            estimate_error: true,
        }
    }
}

impl SeriesConfig {
    /// Defaults for the one-point series (n1 <= 3).
    pub fn one_point() -> Self {
        Self { n1_max: 3, n2_max: 0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z_radius > 1.0) || !self.z_radius.is_finite() {
            return Err(invalid(format!("z_radius must exceed 1, got {}", self.z_radius)));
        }
        if self.level1_nodes < 4 || self.level2_nodes < 4 {
            return Err(invalid("node counts per ray must be at least 4"));
        }
        if self.z_nodes < 8 {
            return Err(invalid(format!("z_nodes must be at least 8, got {}", self.z_nodes)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1.0) {
            return Err(invalid(format!("tail_tol must lie in (0, 1), got {}", self.tail_tol)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.budget > 0.0) {
            return Err(invalid("budget must be positive"));
        }
        Ok(())
    }

    pub(crate) fn coarser(&self) -> Self {
        Self {
            level1_nodes: (3 * self.level1_nodes / 4).max(4),
            level2_nodes: (3 * self.level2_nodes / 4).max(4),
            estimate_error: false,
            ..*self
        }
    }
}

/// One entry of the per-(n1, n2) term ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub n1: usize,
    pub n2: usize,
    pub re: f64,
    pub im: f64,
}

/// Result of a series evaluation.
///
/// `value = mantissa * exp(log_scale)`; the pair stays meaningful when `value` itself
/// would underflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    pub imag_residual: f64,
    pub quad_error_est: f64,
    pub truncation_bound: f64,
    pub term_ledger: Vec<TermEntry>,
    pub mantissa: f64,
    pub log_scale: f64,
}

impl EvalResult {
    fn from_terms(terms: &[(usize, usize, C64)], log_scale: f64, sign: f64) -> Self {
        // Terms are stored in scaled form: the true (n1, n2) term is t * exp(n1 * log_scale).
        let shifted: Vec<C64> = terms
            .iter()
            .map(|(n1, _, t)| t * ((*n1 as f64 - 1.0) * log_scale).exp() * sign)
            .collect();
        let m = pairwise_sum(&shifted);
        let term_ledger = terms
            .iter()
            .map(|(n1, n2, t)| {
                let v = t * (*n1 as f64 * log_scale).exp();
                TermEntry { n1: *n1, n2: *n2, re: v.re, im: v.im }
            })
            .collect();
        let value = m.re * log_scale.exp();
        Self {
            value,
            imag_residual: (m.im * log_scale.exp()).abs(),
            quad_error_est: 0.0,
            truncation_bound: 0.0,
            term_ledger,
            mantissa: m.re,
            log_scale,
        }
    }

    pub fn term(&self, n1: usize, n2: usize) -> Option<C64> {
        self.term_ledger
            .iter()
            .find(|t| t.n1 == n1 && t.n2 == n2)
            .map(|t| C64::new(t.re, t.im))
    }
}

// ---------------------------------------------------------------------------------------
// Integrand pieces

/// Exponent of f for (x, tau, h): `-(tau/3) z^3 + x z^2 + h z` on the left half plane and
/// its negative on the right.
pub fn f_exponent(zeta: C64, x: f64, tau: f64, h: f64) -> C64 {
    let e = -tau / 3.0 * zeta * zeta * zeta + x * zeta * zeta + h * zeta;
    if zeta.re < 0.0 {
        e
    } else {
        -e
    }
}

/// f_level(zeta) for the given kernel parameters.
pub fn f_weight(zeta: C64, level: u8, params: &KernelParams) -> Result<C64> {
    if zeta.re == 0.0 {
        return Err(Error::ImaginaryAxis);
    }
    if !(level == 1 || level == 2) {
        return Err(invalid(format!("level must be 1 or 2, got {level}")));
    }
    let (x, tau, h) = params.level(level);
    Ok(f_exponent(zeta, x, tau, h).exp())
}

/// The full integrand F(xi1, xi2, eta1, eta2): the f factors, the squared Cauchy factors of
/// both levels and the inter-level coupling ratio, all by product formulas.
pub fn series_integrand(
    xi1: &[C64],
    xi2: &[C64],
    eta1: &[C64],
    eta2: &[C64],
    params: &KernelParams,
) -> Result<C64> {
    if xi1.len() != eta1.len() || xi2.len() != eta2.len() {
        return Err(invalid("xi and eta vectors of one level must have equal length"));
    }
    let mut prod = ONE;
    for (v, lvl) in [(xi1, 1u8), (eta1, 1), (xi2, 2), (eta2, 2)] {
        for z in v {
            prod *= f_weight(*z, lvl, params)?;
        }
    }
    let c1 = cauchy_factor(xi1, eta1)?;
    let c2 = cauchy_factor(xi2, eta2)?;
    let numer = delta_cross(xi1, eta2) * delta_cross(eta1, xi2);
    let denom = delta_cross(xi1, xi2) * delta_cross(eta1, eta2);
    if denom == C64::new(0.0, 0.0) {
        return Err(Error::Coincident);
    }
    Ok(prod * c1 * c1 * c2 * c2 * numer / denom)
}

// ---------------------------------------------------------------------------------------
// Grids

/// Quadrature grids on the contours used by one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesGrids {
    pub family: ContourFamily,
    pub left1: QuadratureGrid,
    pub right1: QuadratureGrid,
    pub left_in: QuadratureGrid,
    pub left_out: QuadratureGrid,
    pub right_out: QuadratureGrid,
    pub right_in: QuadratureGrid,
    /// ln of |f1| at the two level-1 anchors, summed; exp(-this) scales each level-1 pair.
    pub level1_log_scale: f64,
}

fn empty_grid() -> QuadratureGrid {
    QuadratureGrid {
        nodes: vec![],
        weights: vec![],
        params: vec![],
        u_max: 0.0,
        kind: crate::contour::GridKind::RayPair,
    }
}

fn level_grid(c: &RayContour, x: f64, tau: f64, h: f64, nodes: usize, tail_tol: f64) -> Result<QuadratureGrid> {
    ray_quadrature_weighted(c, tau, nodes, tail_tol, |z| f_exponent(z, x, tau, h).re)
}

impl SeriesGrids {
    /// Grids on `family`; the in contours are left empty when `with_inner` is false.
    pub fn on_family(
        family: ContourFamily,
        params: &KernelParams,
        config: &SeriesConfig,
        with_inner: bool,
    ) -> Result<Self> {
        let (x1, t1, h1) = params.level(1);
        let (x2, t2, h2) = params.level(2);
        let g1 = |f: Family| level_grid(family.get(f), x1, t1, h1, config.level1_nodes, config.tail_tol);
        let g2 = |f: Family| level_grid(family.get(f), x2, t2, h2, config.level2_nodes, config.tail_tol);
        let (left_in, right_in) = if with_inner {
            (g2(Family::LeftIn)?, g2(Family::RightIn)?)
        } else {
            (empty_grid(), empty_grid())
        };
        let a_l = family.get(Family::Left).anchor;
        let a_r = family.get(Family::Right).anchor;
        let level1_log_scale = -(f_exponent(a_l, x1, t1, h1).re + f_exponent(a_r, x1, t1, h1).re);
        Ok(Self {
            left1: g1(Family::Left)?,
            right1: g1(Family::Right)?,
            left_in,
            left_out: g2(Family::LeftOut)?,
            right_out: g2(Family::RightOut)?,
            right_in,
            family,
            level1_log_scale,
        })
    }

    /// Full nested family, for kernels at fixed z.
    pub fn nested(params: &KernelParams, config: &SeriesConfig) -> Result<Self> {
        params.validate()?;
        let fam = config.layout.nested(params)?;
        Self::on_family(fam, params, config, true)
    }

    /// Level-1 contours at their saddle and level-2 out contours only.
    pub fn dominant(params: &KernelParams, config: &SeriesConfig) -> Result<Self> {
        params.validate()?;
        let fam = config.layout.dominant(params)?;
        Self::on_family(fam, params, config, false)
    }

    pub fn level2_left_len(&self) -> usize {
        self.left_in.len() + self.left_out.len()
    }

    pub fn level2_right_len(&self) -> usize {
        self.right_in.len() + self.right_out.len()
    }
}

/// Height of the centred single-level problem: after z -> z + x/tau the exponent of f at
/// (x, tau, h) becomes the one at (0, tau, h + x^2/tau) up to a constant that cancels
/// between every xi and its paired eta.
pub fn centred_height(x: f64, tau: f64, h: f64) -> f64 {
    h + x * x / tau
}

/// Two-ray grids for a single-level integral at (x, tau, h), through the saddles of f.
/// Callers that evaluate a single level on their own should pass x = 0 and the
/// [`centred_height`].
pub fn single_level_grids(
    x: f64,
    tau: f64,
    h: f64,
    nodes: usize,
    tail_tol: f64,
    layout: &Layout,
) -> Result<(QuadratureGrid, QuadratureGrid, f64)> {
    if !(tau > 0.0) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    let r = layout.single(x, tau, h);
    let left = RayContour { anchor: C64::new(-r, 0.0), family: Family::Left };
    let right = RayContour { anchor: C64::new(r, 0.0), family: Family::Right };
    let scale = -(f_exponent(left.anchor, x, tau, h).re + f_exponent(right.anchor, x, tau, h).re);
    Ok((
        level_grid(&left, x, tau, h, nodes, tail_tol)?,
        level_grid(&right, x, tau, h, nodes, tail_tol)?,
        scale,
    ))
}

// ---------------------------------------------------------------------------------------
// Bivariate truncated series of jets

#[derive(Debug, Clone)]
struct Bi {
    n1: usize,
    n2: usize,
    c: Vec<Jet>,
}

impl Bi {
    fn zero(n1: usize, n2: usize, order: usize) -> Self {
        Self { n1, n2, c: vec![Jet::zero(order); (n1 + 1) * (n2 + 1)] }
    }

    fn at(&self, i: usize, j: usize) -> &Jet {
        &self.c[i * (self.n2 + 1) + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Jet) {
        let k = i * (self.n2 + 1) + j;
        self.c[k] = v;
    }

    fn mul(&self, o: &Bi) -> Bi {
        let order = self.c[0].order();
        let mut out = Bi::zero(self.n1, self.n2, order);
        for i1 in 0..=self.n1 {
            for j1 in 0..=self.n2 {
                let a = self.at(i1, j1);
                if a.0.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                    continue;
                }
                for i2 in 0..=(self.n1 - i1) {
                    for j2 in 0..=(self.n2 - j1) {
                        let k = (i1 + i2) * (self.n2 + 1) + j1 + j2;
                        out.c[k] = &out.c[k] + &(a * o.at(i2, j2));
                    }
                }
            }
        }
        out
    }

    /// exp of a series with vanishing constant term.
    fn exp(&self) -> Bi {
        let order = self.c[0].order();
        let mut result = Bi::zero(self.n1, self.n2, order);
        result.set(0, 0, Jet::constant(order, ONE));
        let mut term = result.clone();
        for m in 1..=(self.n1 + self.n2) {
            term = term.mul(self);
            let inv = C64::new(1.0 / m as f64, 0.0);
            for v in term.c.iter_mut() {
                *v = v.scale(inv);
            }
            for (r, t) in result.c.iter_mut().zip(&term.c) {
                *r = &*r + t;
            }
        }
        result
    }
}

fn alt(k: usize) -> C64 {
    if k % 2 == 0 {
        ONE
    } else {
        -ONE
    }
}

// ---------------------------------------------------------------------------------------
// Block engine

/// One side of a level: node positions, per-node weights and per-node f values.
#[derive(Debug, Clone, Default)]
pub(crate) struct Side {
    pub z: Vec<C64>,
    pub w: Vec<C64>,
    pub f: Vec<C64>,
}

impl Side {
    pub(crate) fn from_grid(g: &QuadratureGrid, x: f64, tau: f64, h: f64, log_shift: f64, node_w: C64) -> Self {
        Self {
            z: g.nodes.clone(),
            w: g.weights.iter().map(|w| w * node_w).collect(),
            f: g.nodes.iter().map(|z| (f_exponent(*z, x, tau, h) + log_shift).exp()).collect(),
        }
    }

    fn extend(&mut self, o: Side) {
        self.z.extend(o.z);
        self.w.extend(o.w);
        self.f.extend(o.f);
    }

    fn len(&self) -> usize {
        self.z.len()
    }
}

/// Pair weights mu(l_i, r_j) = pref w_i w_j f_i f_j / (l_i - r_j), carried as jets of
/// exp(e * dir * (l_i - r_j)).
fn pair_weights(left: &Side, right: &Side, pref: C64, dir: f64, order: usize) -> JetMatrix {
    let (n, m) = (left.len(), right.len());
    let mut out = JetMatrix::zeros(order, n, m);
    for i in 0..n {
        for j in 0..m {
            let diff = left.z[i] - right.z[j];
            let v = pref * left.w[i] * right.w[j] * left.f[i] * right.f[j] / diff;
            let lin = diff * dir;
            let mut c = v;
            for (k, mat) in out.0.iter_mut().enumerate() {
                mat[(i, j)] = c;
                c = c * lin / (k + 1) as f64;
            }
        }
    }
    out
}

fn cauchy_matrix(rows: &[C64], cols: &[C64]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| ONE / (rows[i] - cols[j]))
}

/// Level data for one determinant: level-1 sides (xi1, eta1) with prefactor and direction,
/// level-2 sides (xi2, eta2) likewise.
pub(crate) struct LevelData {
    pub left: Side,
    pub right: Side,
    pub pref: C64,
    pub dir: f64,
}

pub(crate) struct Blocks {
    a: JetMatrix,
    b: JetMatrix,
    c: JetMatrix,
    d: JetMatrix,
}

impl Blocks {
    pub(crate) fn new(l1: &LevelData, l2: &LevelData, order: usize) -> Self {
        let wp = pair_weights(&l1.left, &l1.right, l1.pref, l1.dir, order).transpose();
        let wq = pair_weights(&l2.left, &l2.right, l2.pref, l2.dir, order);
        let a = JetMatrix::left_mul(&cauchy_matrix(&l1.left.z, &l1.right.z), &wp);
        let b = JetMatrix::left_mul(&cauchy_matrix(&l1.left.z, &l2.left.z), &wq);
        let c = JetMatrix::left_mul(&cauchy_matrix(&l2.right.z, &l1.right.z), &wp);
        let d = JetMatrix::left_mul(&cauchy_matrix(&l2.right.z, &l2.left.z), &wq);
        Self { a, b, c, d }
    }

    /// Coefficients of s^i t^j, i <= n1, j <= n2, of det(I + M(s, t)).
    fn det_series(&self, n1: usize, n2: usize) -> Bi {
        let order = self.a.order();
        let mut l = Bi::zero(n1, n2, order);
        let has2 = self.d.nrows() > 0 && n2 > 0;
        if has2 {
            let mut p = self.d.clone();
            for m in 1..=n2 {
                l.set(0, m, p.trace().scale(alt(m + 1) / m as f64));
                if m < n2 {
                    p = p.mul(&self.d);
                }
            }
        }
        if n1 > 0 && self.a.nrows() > 0 {
            let mut g = vec![self.a.clone()];
            if has2 {
                let mut x = self.b.clone();
                for j in 1..=n2 {
                    g.push(x.mul(&self.c).scale(alt(j)));
                    if j < n2 {
                        x = x.mul(&self.d);
                    }
                }
            }
            let mut pow = g.clone();
            for k in 1..=n1 {
                for (j, m) in pow.iter().enumerate().take(n2 + 1) {
                    let v = &l.at(k, j).clone() + &m.trace().scale(alt(k + 1) / k as f64);
                    l.set(k, j, v);
                }
                if k < n1 {
                    pow = poly_mul(&pow, &g, n2);
                }
            }
        }
        l.exp()
    }
}

fn poly_mul(p: &[JetMatrix], q: &[JetMatrix], deg: usize) -> Vec<JetMatrix> {
    let len = (p.len() + q.len() - 1).min(deg + 1);
    let mut out: Vec<Option<JetMatrix>> = vec![None; len];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            if i + j >= len {
                continue;
            }
            let prod = a.mul(b);
            match &mut out[i + j] {
                Some(acc) => acc.add_assign(&prod),
                slot => *slot = Some(prod),
            }
        }
    }
    out.into_iter().map(|m| m.expect("every degree below len is reached")).collect()
}

/// Jet direction and order of a kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Probe {
    pub d1: f64,
    pub d2: f64,
    pub order: usize,
}

impl Probe {
    pub const PLAIN: Probe = Probe { d1: 0.0, d2: 0.0, order: 0 };
    /// Insertion of (sum(xi1 - eta1) - sum(xi2 - eta2)).
    pub const TILDE: Probe = Probe { d1: 1.0, d2: -1.0, order: 1 };
}

/// Level data of the full kernel at fixed z, level-1 pairs scaled by exp(kappa).
fn z_levels(z: C64, params: &KernelParams, grids: &SeriesGrids, kappa: f64, probe: Probe) -> (LevelData, LevelData) {
    let (x1, t1, h1) = params.level(1);
    let (x2, t2, h2) = params.level(2);
    let half = 0.5 * kappa;
    let l1 = LevelData {
        left: Side::from_grid(&grids.left1, x1, t1, h1, half, ONE),
        right: Side::from_grid(&grids.right1, x1, t1, h1, half, ONE),
        pref: -(ONE - z),
        dir: probe.d1,
    };
    let w_in = ONE / (ONE - z);
    let w_out = -z / (ONE - z);
    let mut left = Side::from_grid(&grids.left_in, x2, t2, h2, 0.0, w_in);
    left.extend(Side::from_grid(&grids.left_out, x2, t2, h2, 0.0, w_out));
    let mut right = Side::from_grid(&grids.right_in, x2, t2, h2, 0.0, w_in);
    right.extend(Side::from_grid(&grids.right_out, x2, t2, h2, 0.0, w_out));
    let l2 = LevelData { left, right, pref: ONE - ONE / z, dir: probe.d2 };
    (l1, l2)
}

/// Level data of the z-integrated channel with out contours only.
fn out_levels(params: &KernelParams, grids: &SeriesGrids, kappa: f64, probe: Probe) -> (LevelData, LevelData) {
    let (x1, t1, h1) = params.level(1);
    let (x2, t2, h2) = params.level(2);
    let half = 0.5 * kappa;
    let l1 = LevelData {
        left: Side::from_grid(&grids.left1, x1, t1, h1, half, ONE),
        right: Side::from_grid(&grids.right1, x1, t1, h1, half, ONE),
        pref: -ONE,
        dir: probe.d1,
    };
    let l2 = LevelData {
        left: Side::from_grid(&grids.left_out, x2, t2, h2, 0.0, ONE),
        right: Side::from_grid(&grids.right_out, x2, t2, h2, 0.0, ONE),
        pref: ONE,
        dir: probe.d2,
    };
    (l1, l2)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// (-1)^{n1+n2} (n1! n2!)^2, converting a series coefficient into a kernel value.
fn kernel_factor(n1: usize, n2: usize) -> f64 {
    let f = factorial(n1) * factorial(n2);
    alt(n1 + n2).re * f * f
}

fn check_indices(z: C64, n1: usize, n2: usize) -> Result<()> {
    if n1 < 1 || n2 < 1 {
        return Err(invalid(format!("kernel indices must be at least 1, got ({n1}, {n2})")));
    }
    if !(z.norm() > 1.0) {
        return Err(invalid(format!("|z| must exceed 1, got {}", z.norm())));
    }
    Ok(())
}

fn kernel_jet(z: C64, n1: usize, n2: usize, params: &KernelParams, grids: &SeriesGrids, probe: Probe) -> Result<Jet> {
    check_indices(z, n1, n2)?;
    let (l1, l2) = z_levels(z, params, grids, 0.0, probe);
    let bl = Blocks::new(&l1, &l2, probe.order);
    Ok(bl.det_series(n1, n2).at(n1, n2).scale(C64::new(kernel_factor(n1, n2), 0.0)))
}

/// T_{n1,n2}(z) on the given grids.
pub fn t_kernel(z: C64, n1: usize, n2: usize, params: &KernelParams, grids: &SeriesGrids) -> Result<C64> {
    Ok(kernel_jet(z, n1, n2, params, grids, Probe::PLAIN)?.value())
}

/// T~_{n1,n2}(z): T with the linear factor sum(xi1 - eta1) - sum(xi2 - eta2) inserted.
pub fn t_tilde_kernel(z: C64, n1: usize, n2: usize, params: &KernelParams, grids: &SeriesGrids) -> Result<C64> {
    Ok(kernel_jet(z, n1, n2, params, grids, Probe::TILDE)?.derivative(1))
}

/// T (and T~ when `tilde`) by direct tensor quadrature of [`series_integrand`] over all
/// 2(n1 + n2) variables. Independent of the matrix engine; intended as an oracle on small
/// grids.
pub fn t_kernel_tensor(
    z: C64,
    n1: usize,
    n2: usize,
    params: &KernelParams,
    grids: &SeriesGrids,
    tilde: bool,
    budget: f64,
) -> Result<C64> {
    check_indices(z, n1, n2)?;
    let w_in = ONE / (ONE - z);
    let w_out = -z / (ONE - z);
    let union = |a: &QuadratureGrid, b: &QuadratureGrid| -> Vec<(C64, C64)> {
        let mut v: Vec<(C64, C64)> = a.nodes.iter().zip(&a.weights).map(|(x, w)| (*x, w * w_in)).collect();
        v.extend(b.nodes.iter().zip(&b.weights).map(|(x, w)| (*x, w * w_out)));
        v
    };
    let plain = |g: &QuadratureGrid| -> Vec<(C64, C64)> { g.nodes.iter().copied().zip(g.weights.iter().copied()).collect() };
    let l1 = plain(&grids.left1);
    let r1 = plain(&grids.right1);
    let l2 = union(&grids.left_in, &grids.left_out);
    let r2 = union(&grids.right_in, &grids.right_out);
    let required = (l1.len() as f64).powi(n1 as i32)
        * (r1.len() as f64).powi(n1 as i32)
        * (l2.len() as f64).powi(n2 as i32)
        * (r2.len() as f64).powi(n2 as i32);
    if required > budget {
        return Err(Error::BudgetExceeded { dimension: 2 * (n1 + n2), required, budget });
    }
    // Variable order: xi1 (n1), eta1 (n1), xi2 (n2), eta2 (n2).
    let axes: Vec<&Vec<(C64, C64)>> = std::iter::repeat_n(&l1, n1)
        .chain(std::iter::repeat_n(&r1, n1))
        .chain(std::iter::repeat_n(&l2, n2))
        .chain(std::iter::repeat_n(&r2, n2))
        .collect();
    let dims: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let outer = dims[0];
    let inner: usize = dims[1..].iter().product();
    let partial: Vec<Result<C64>> = (0..outer)
        .into_par_iter()
        .map(|i0| {
            let mut idx = vec![0usize; dims.len()];
            idx[0] = i0;
            let mut acc = Vec::with_capacity(inner);
            let mut pts = vec![C64::new(0.0, 0.0); dims.len()];
            for _ in 0..inner {
                let mut w = ONE;
                for (k, &i) in idx.iter().enumerate() {
                    let (p, wk) = axes[k][i];
                    pts[k] = p;
                    w *= wk;
                }
                let (xi1, rest) = pts.split_at(n1);
                let (eta1, rest) = rest.split_at(n1);
                let (xi2, eta2) = rest.split_at(n2);
                let mut v = match series_integrand(xi1, xi2, eta1, eta2, params) {
                    Ok(v) => v,
                    Err(Error::Coincident) => C64::new(0.0, 0.0),
                    Err(e) => return Err(e),
                };
                if tilde {
                    let s1: C64 = xi1.iter().zip(eta1).map(|(a, b)| a - b).sum();
                    let s2: C64 = xi2.iter().zip(eta2).map(|(a, b)| a - b).sum();
                    v *= s1 - s2;
                }
                acc.push(v * w);
                for k in (1..dims.len()).rev() {
                    idx[k] += 1;
                    if idx[k] < dims[k] {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            Ok(pairwise_sum(&acc))
        })
        .collect();
    let partial: Vec<C64> = partial.into_iter().collect::<Result<_>>()?;
    let pre = (ONE - z).powi(n1 as i32) * (ONE - ONE / z).powi(n2 as i32);
    Ok(pairwise_sum(&partial) * pre)
}

// ---------------------------------------------------------------------------------------
// Tail probabilities

/// (1 / 2 pi) \oint_{|z| = r} |dz| / |z (1 - z)|, the factor converting sup |T| into a bound
/// on the z-integrated term.
pub fn circle_factor(radius: f64, nodes: usize) -> Result<f64> {
    let (z, _) = circle_rule(radius, nodes.max(8))?;
    Ok(z.iter().map(|zk| radius / (zk.norm() * (ONE - zk).norm())).sum::<f64>() / z.len() as f64)
}

/// P(H(x1, tau1) >= h1) from the one-level determinantal series, n <= `n1_max`.
pub fn one_point_tail(x1: f64, tau1: f64, h1: f64, config: &SeriesConfig) -> Result<EvalResult> {
    config.validate()?;
    if !(tau1 > 0.0) {
        return Err(invalid(format!("tau1 must be positive, got {tau1}")));
    }
    if config.n1_max < 1 {
        return Err(invalid("n1_max must be at least 1"));
    }
    let (mut out, coeffs) = one_point_core(x1, tau1, h1, config)?;
    if config.estimate_error {
        let (coarse, _) = one_point_core(x1, tau1, h1, &config.coarser())?;
        out.quad_error_est = (coarse.value - out.value).abs();
    }
    if config.truncation_mode == TruncationMode::BoundCertified {
        let measured: Vec<(usize, f64)> = coeffs.iter().map(|(n, c)| (*n, *c)).collect();
        out.truncation_bound = bounds::one_point_truncation(&measured, x1, tau1, h1, config.n1_max, config.epsilon);
    }
    Ok(out)
}

/// Returns the result and the true-scale |term| of each computed order.
fn one_point_core(x1: f64, tau1: f64, h1: f64, config: &SeriesConfig) -> Result<(EvalResult, Vec<(usize, f64)>)> {
    let (x1, h1) = (0.0, centred_height(x1, tau1, h1));
    let (l, r, kappa) = single_level_grids(x1, tau1, h1, config.level1_nodes, config.tail_tol, &config.layout)?;
    let half = 0.5 * kappa;
    let l1 = LevelData {
        left: Side::from_grid(&l, x1, tau1, h1, half, ONE),
        right: Side::from_grid(&r, x1, tau1, h1, half, ONE),
        pref: -ONE,
        dir: 0.0,
    };
    let l2 = LevelData { left: Side::default(), right: Side::default(), pref: ONE, dir: 0.0 };
    let bl = Blocks::new(&l1, &l2, 0);
    let ser = bl.det_series(config.n1_max, 0);
    let terms: Vec<(usize, usize, C64)> = (1..=config.n1_max).map(|n| (n, 0, ser.at(n, 0).value())).collect();
    let res = EvalResult::from_terms(&terms, -kappa, -1.0);
    let mags = terms.iter().map(|(n, _, t)| (*n, t.norm() * (-(*n as f64) * kappa).exp())).collect();
    Ok((res, mags))
}

/// Level-2-only series at (x, tau, h) on the out contours placed at the level's saddle:
/// coefficients of t^n, n <= n_max, as jets in h of the given order.
pub(crate) fn level2_series(x: f64, tau: f64, h: f64, n_max: usize, order: usize, config: &SeriesConfig) -> Result<Vec<Jet>> {
    let (x, h) = (0.0, centred_height(x, tau, h));
    let (l, r, _) = single_level_grids(x, tau, h, config.level2_nodes, config.tail_tol, &config.layout)?;
    let l1 = LevelData { left: Side::default(), right: Side::default(), pref: ONE, dir: 0.0 };
    let l2 = LevelData {
        left: Side::from_grid(&l, x, tau, h, 0.0, ONE),
        right: Side::from_grid(&r, x, tau, h, 0.0, ONE),
        pref: ONE,
        dir: 1.0,
    };
    let bl = Blocks::new(&l1, &l2, order);
    let ser = bl.det_series(0, n_max);
    Ok((0..=n_max).map(|n| ser.at(0, n).clone()).collect())
}

/// Scaled one-level coefficients c_n, n = 1..=n_max, of det(I - K) at (x, tau, h) as jets in
/// h, with the log scale: the true coefficient is c_n exp(n log_scale) and
/// P(H(x, tau) >= h) = -sum c_n.
fn one_level_jets(x: f64, tau: f64, h: f64, n_max: usize, order: usize, config: &SeriesConfig) -> Result<(Vec<Jet>, f64)> {
    let (x, h) = (0.0, centred_height(x, tau, h));
    let (l, r, kappa) = single_level_grids(x, tau, h, config.level1_nodes, config.tail_tol, &config.layout)?;
    let half = 0.5 * kappa;
    let l1 = LevelData {
        left: Side::from_grid(&l, x, tau, h, half, ONE),
        right: Side::from_grid(&r, x, tau, h, half, ONE),
        pref: -ONE,
        dir: 1.0,
    };
    let l2 = LevelData { left: Side::default(), right: Side::default(), pref: ONE, dir: 0.0 };
    let ser = Blocks::new(&l1, &l2, order).det_series(n_max, 0);
    Ok(((1..=n_max).map(|n| ser.at(n, 0).clone()).collect(), -kappa))
}

/// d/dh P(H(x, tau) >= h) = -F'(h; x, tau) from the one-level series, n <= `n1_max`.
pub fn one_point_tail_derivative(x: f64, tau: f64, h: f64, config: &SeriesConfig) -> Result<EvalResult> {
    config.validate()?;
    if !(tau > 0.0) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    if config.n1_max < 1 {
        return Err(invalid("n1_max must be at least 1"));
    }
    let run = |cfg: &SeriesConfig| -> Result<EvalResult> {
        let (jets, ls) = one_level_jets(x, tau, h, cfg.n1_max, 1, cfg)?;
        let terms: Vec<(usize, usize, C64)> = jets.iter().enumerate().map(|(k, j)| (k + 1, 0, j.derivative(1))).collect();
        Ok(EvalResult::from_terms(&terms, ls, -1.0))
    };
    let mut out = run(config)?;
    if config.estimate_error {
        let coarse = run(&config.coarser())?;
        out.quad_error_est = ((coarse.mantissa - out.mantissa) * out.log_scale.exp()).abs();
    }
    Ok(out)
}

/// The z integral (1/2 pi i) \oint T~_{1,n2}(z) dz / (z (1 - z)) over |z| > 1, evaluated
/// without z quadrature on the level-1 and out contours of `grids`.
pub fn n1_equals_1_term(n2: usize, params: &KernelParams, grids: &SeriesGrids) -> Result<C64> {
    if n2 < 1 {
        return Err(invalid("n2 must be at least 1"));
    }
    params.validate()?;
    let kappa = grids.level1_log_scale;
    let (l1, l2) = out_levels(params, grids, kappa, Probe::TILDE);
    let ser = Blocks::new(&l1, &l2, 1).det_series(1, n2);
    Ok(ser.at(1, n2).derivative(1) * kernel_factor(1, n2) * (-kappa).exp())
}

/// Scaled per-(n1, n2) z-integrated coefficients with sup_z |T| of each, on the circle.
pub(crate) struct CircleTerms {
    pub terms: Vec<(usize, usize, C64)>,
    pub sup_t: Vec<(usize, usize, f64)>,
    pub log_scale: f64,
}

pub(crate) fn circle_terms(params: &KernelParams, config: &SeriesConfig, probe: Probe) -> Result<CircleTerms> {
    let grids = SeriesGrids::nested(params, config)?;
    let kappa = grids.level1_log_scale;
    let (zs, ws) = circle_rule(config.z_radius, config.z_nodes)?;
    let (n1, n2) = (config.n1_max, config.n2_max);
    let deriv = probe.order;
    let per_z: Vec<Vec<C64>> = zs
        .par_iter()
        .map(|z| {
            let (l1, l2) = z_levels(*z, params, &grids, kappa, probe);
            let ser = Blocks::new(&l1, &l2, probe.order).det_series(n1, n2);
            let mut v = Vec::with_capacity(n1 * n2);
            for i in 1..=n1 {
                for j in 1..=n2 {
                    v.push(ser.at(i, j).derivative(deriv));
                }
            }
            v
        })
        .collect();
    let mut terms = Vec::new();
    let mut sup_t = Vec::new();
    let mut k = 0;
    for i in 1..=n1 {
        for j in 1..=n2 {
            let vals: Vec<C64> = zs
                .iter()
                .zip(&ws)
                .zip(&per_z)
                .map(|((z, w), c)| c[k] * w / (z * (ONE - z)))
                .collect();
            terms.push((i, j, pairwise_sum(&vals)));
            let sup = per_z.iter().map(|c| c[k].norm()).fold(0.0, f64::max);
            let kf = kernel_factor(i, j).abs();
            sup_t.push((i, j, sup * kf * (-(i as f64) * kappa).exp()));
            k += 1;
        }
    }
    Ok(CircleTerms { terms, sup_t, log_scale: -kappa })
}

/// Scaled z-integrated n1 = 1 coefficients for n2 = 1..=n2_max, with the log scale.
pub(crate) fn dominant_terms(params: &KernelParams, config: &SeriesConfig, probe: Probe) -> Result<(Vec<(usize, usize, C64)>, f64)> {
    let grids = SeriesGrids::dominant(params, config)?;
    let kappa = grids.level1_log_scale;
    let (l1, l2) = out_levels(params, &grids, kappa, probe);
    let ser = Blocks::new(&l1, &l2, probe.order).det_series(1, config.n2_max);
    let terms = (1..=config.n2_max).map(|j| (1, j, ser.at(1, j).derivative(probe.order))).collect();
    Ok((terms, -kappa))
}

/// Chooses the route for level-1 height h1.
pub fn resolve_route(route: Route, h1: f64) -> Route {
    match route {
        Route::Auto if h1 >= DOMINANT_THRESHOLD => Route::Dominant,
        Route::Auto => Route::Circle,
        r => r,
    }
}

/// Number of pair-kernel evaluations the block engine performs for one two-point series:
/// one per (row node, column node) pair of the combined determinant, per z node on the
/// circle route.
pub fn engine_evaluations(params: &KernelParams, config: &SeriesConfig) -> Result<f64> {
    let route = resolve_route(config.route, params.h1);
    let (grids, z_nodes) = match route {
        Route::Dominant => (SeriesGrids::dominant(params, config)?, 1.0),
        _ => (SeriesGrids::nested(params, config)?, config.z_nodes as f64),
    };
    let rows = (grids.left1.len() + grids.level2_right_len()) as f64;
    let cols = (grids.right1.len() + grids.level2_left_len()) as f64;
    Ok(z_nodes * rows * cols)
}

pub(crate) fn series_value(params: &KernelParams, config: &SeriesConfig, probe: Probe) -> Result<EvalResult> {
    config.validate()?;
    params.validate()?;
    if config.n1_max < 1 || config.n2_max < 1 {
        return Err(invalid("two-point series needs n1_max, n2_max >= 1"));
    }
    let required = engine_evaluations(params, config)?;
    if required > config.budget {
        return Err(Error::BudgetExceeded {
            dimension: 2 * (config.n1_max + config.n2_max),
            required,
            budget: config.budget,
        });
    }
    let route = resolve_route(config.route, params.h1);
    let run = |cfg: &SeriesConfig| -> Result<(EvalResult, Vec<(usize, usize, f64)>, Route)> {
        match route {
            Route::Dominant => {
                let (terms, ls) = dominant_terms(params, cfg, probe)?;
                let cf = circle_factor(cfg.z_radius, cfg.z_nodes)?;
                // Proxy for sup |T| from the z-integrated value.
                let sup = terms
                    .iter()
                    .map(|(i, j, t)| (*i, *j, t.norm() * kernel_factor(*i, *j).abs() * ls.exp() / cf))
                    .collect();
                Ok((EvalResult::from_terms(&terms, ls, 1.0), sup, Route::Dominant))
            }
            _ => {
                let ct = circle_terms(params, cfg, probe)?;
                Ok((EvalResult::from_terms(&ct.terms, ct.log_scale, 1.0), ct.sup_t, Route::Circle))
            }
        }
    };
    let (mut out, sup, route) = run(config)?;
    if config.estimate_error {
        let (coarse, _, _) = run(&config.coarser())?;
        out.quad_error_est = ((coarse.mantissa - out.mantissa) * out.log_scale.exp()).abs();
    }
    if config.truncation_mode == TruncationMode::BoundCertified {
        let cf = circle_factor(config.z_radius, config.z_nodes)?;
        let n1_computed = if route == Route::Dominant { 1 } else { config.n1_max };
        out.truncation_bound = bounds::two_point_truncation(
            &sup,
            params,
            n1_computed,
            config.n2_max,
            config.epsilon,
            cf,
            probe.order > 0,
        );
    }
    Ok(out)
}

/// P(H(x1, tau1) >= h1, H(x1 + x2, tau1 + tau2) >= h1 + h2).
pub fn two_point_tail(params: &KernelParams, config: &SeriesConfig) -> Result<EvalResult> {
    series_value(params, config, Probe::PLAIN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_weight_examples() {
        let p = KernelParams::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let v = f_weight(C64::new(-1.0, 0.0), 1, &p).unwrap();
        assert!((v.re - (1.0f64 / 3.0).exp()).abs() < 1e-15 && v.im == 0.0);
        assert_eq!(f_weight(C64::new(0.0, 1.0), 1, &p), Err(Error::ImaginaryAxis));
    }

    #[test]
    fn bivariate_exp_of_linear_series() {
        // exp(s) truncated at degree 3 has coefficients 1/k!.
        let mut l = Bi::zero(3, 0, 0);
        l.set(1, 0, Jet::constant(0, ONE));
        let e = l.exp();
        for k in 0..=3 {
            assert!((e.at(k, 0).value().re - 1.0 / factorial(k)).abs() < 1e-15);
        }
    }
}
