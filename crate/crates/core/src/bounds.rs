//! Executable versions of the kernel envelope, the exponent and determinant estimates, the
//! combinatorial inequalities and the steepest-descent distance estimate.
//!
//! Constants that the estimates only assert to exist are calibrated at the smallest
//! parameter of a grid and then held fixed for the remaining grid points.

use crate::cauchy::{cauchy_factor, delta_cross};
use crate::contour::{Family, RayContour};
use crate::error::{invalid, Error, Result};
use crate::params::KernelParams;
use crate::series::{self, SeriesConfig, ENVELOPE_HORIZON};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Safety factor applied to certified truncation bounds.
pub const TRUNCATION_SAFETY: f64 = 10.0;

// ---------------------------------------------------------------------------------------
// Seeded sampling

/// SplitMix64: state advances by the golden-ratio increment, outputs are the standard
/// xor-shift-multiply finalizer of the state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

// ---------------------------------------------------------------------------------------
// Exponent estimates

/// g(u; tau) = -(8/3) tau u^3.
pub fn g_decay(u: f64, tau: f64) -> Result<f64> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(invalid(format!("u must be finite and nonnegative, got {u}")));
    }
    if !(tau > 0.0) {
        return Err(invalid(format!("tau must be positive, got {tau}")));
    }
    Ok(-8.0 / 3.0 * tau * u * u * u)
}

/// Centred exponent m(zeta) = -(tau/3) zeta^3 + (h + x^2/tau) zeta. After the shift
/// zeta -> zeta + x/tau it equals the exponent of f up to a constant that cancels between
/// every xi and its paired eta.
pub fn centred_exponent(zeta: C64, x: f64, tau: f64, h: f64) -> C64 {
    -tau / 3.0 * zeta * zeta * zeta + (h + x * x / tau) * zeta
}

/// The saddle-anchored family without clamping: level-2 anchors at ∓S2 ∓ {-c, 0, c} and
/// level-1 anchors at ∓S1, with c = (|epsilon| / 20) tau2^{-1} sqrt(h2 tau2 + x2^2).
///
/// Unlike [`crate::contour::build_contours`] the level-1 contour is not moved into the
/// level-2 corridor, so the result need not be nested.
pub fn paper_family(params: &KernelParams, epsilon: f64) -> Result<[RayContour; 6]> {
    params.validate()?;
    let q2 = params.h2 * params.tau2 + params.x2 * params.x2;
    let q1 = params.h1 * params.tau1 + params.x1 * params.x1;
    if !(q1 > 0.0 && q2 > 0.0) {
        return Err(Error::Precondition(format!(
            "saddle-anchored contours need h tau + x^2 > 0 on both levels, got {q1} and {q2}"
        )));
    }
    let s1 = q1.sqrt() / params.tau1;
    let s2 = q2.sqrt() / params.tau2;
    let c = epsilon.abs() / 20.0 * q2.sqrt() / params.tau2;
    let anchors = [-s2 - c, -s1, -s2 + c, s2 - c, s1, s2 + c];
    Ok(std::array::from_fn(|i| RayContour { anchor: C64::new(anchors[i], 0.0), family: Family::ALL[i] }))
}

/// Outcome of [`exponent_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest value of (log|f| - bound) over all samples; nonpositive when every sample
    /// satisfies its inequality.
    pub max_gap: f64,
    pub pass: bool,
}

/// Checks |f_l(zeta)| <= exp(-(2(1 - epsilon)/3)(h_l tau_l + x_l^2)^{3/2} tau_l^{-2} + g(u; tau_l))
/// on the four contours Gamma_L, Gamma_R (level 1) and Gamma_{L,out}, Gamma_{R,out} (level 2)
/// of [`paper_family`], in centred variables. Each contour gets its anchor (u = 0) plus
/// `samples` random nodes with u uniform on [0, 3] and a random ray.
///
/// A negative `epsilon` tightens the right-hand side beyond what holds at the anchor and is
/// accepted as a sanity inversion; the contour offset uses |epsilon|.
pub fn exponent_bound_check(params: &KernelParams, epsilon: f64, samples: usize, seed: u64) -> Result<ExponentReport> {
    if !(epsilon.abs() < 1.0) {
        return Err(invalid(format!("|epsilon| must be below 1, got {epsilon}")));
    }
    let fam = paper_family(params, epsilon)?;
    let mut rng = SplitMix64::new(seed);
    let mut count = 0;
    let mut violations = 0;
    let mut max_gap = f64::NEG_INFINITY;
    for (fi, level) in [(1usize, 1u8), (4, 1), (2, 2), (3, 2)] {
        let c = fam[fi];
        let (x, tau, h) = params.level(level);
        // Level-2 contours are centred on the level-2 saddle; the anchor shift by ±c keeps
        // the estimate with the same constant, which is what the inequality asserts.
        let level_rate = 2.0 * (1.0 - epsilon) / 3.0 * (h * tau + x * x).max(0.0).powf(1.5) / (tau * tau);
        for k in 0..=samples {
            let (u, upper) = if k == 0 { (0.0, true) } else { (rng.uniform(0.0, 3.0), rng.next_u64() & 1 == 1) };
            let zeta = c.point(u, upper);
            let m = centred_exponent(zeta, x, tau, h);
            let logf = if c.family.is_left() { m.re } else { -m.re };
            let bound = -level_rate + g_decay(u, tau)?;
            let gap = logf - bound;
            // Relative slack for rounding in the cubic.
            let slack = 1e-12 * (1.0 + bound.abs());
            if gap > slack {
                violations += 1;
            }
            max_gap = max_gap.max(gap);
            count += 1;
        }
    }
    Ok(ExponentReport { samples: count, violations, max_gap, pass: violations == 0 })
}

// ---------------------------------------------------------------------------------------
// Hadamard-type determinant bound

fn point_ray_distance(p: C64, c: &RayContour) -> f64 {
    [true, false]
        .into_iter()
        .map(|upper| {
            let d = c.direction(upper);
            let t = ((p - c.anchor) * d.conj()).re / d.norm_sqr();
            (c.anchor + d * t.max(0.0) - p).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance from a node to the union of all contours other than the one it lies on. The
/// node's own contour is the nearest one.
pub fn node_distance(p: C64, contours: &[RayContour]) -> f64 {
    let d: Vec<f64> = contours.iter().map(|c| point_ray_distance(p, c)).collect();
    let own = d.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc }).0;
    d.iter().enumerate().filter(|(i, _)| *i != own).map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
}

/// Both sides of the Hadamard-type estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// |C(xi1; eta1)^2 C(xi2; eta2)^2 Δ-ratio| against
/// n1^{n1/2} n2^{n2/2} (n1 + n2)^{(n1 + n2)/2} times the product of 1/dist over all nodes.
///
/// The squared Cauchy factor of each level is bounded by Hadamard's inequality for its own
/// Cauchy matrix, and the combined factor `C(xi1, eta2; eta1, xi2)` by the one for the
/// joint matrix, each row of which has entries bounded by the reciprocal node distance.
pub fn hadamard_bound_check(
    xi1: &[C64],
    xi2: &[C64],
    eta1: &[C64],
    eta2: &[C64],
    contours: &[RayContour],
) -> Result<HadamardReport> {
    if xi1.len() != eta1.len() || xi2.len() != eta2.len() {
        return Err(invalid("xi and eta vectors of one level must have equal length"));
    }
    let (n1, n2) = (xi1.len() as f64, xi2.len() as f64);
    let c1 = cauchy_factor(xi1, eta1)?;
    let c2 = cauchy_factor(xi2, eta2)?;
    let denom = delta_cross(xi1, xi2) * delta_cross(eta1, eta2);
    if denom == C64::new(0.0, 0.0) {
        return Err(Error::Coincident);
    }
    let ratio = delta_cross(xi1, eta2) * delta_cross(eta1, xi2) / denom;
    let lhs = (c1 * c1 * c2 * c2 * ratio).norm();
    let pw = |n: f64| if n > 0.0 { n.powf(n / 2.0) } else { 1.0 };
    let mut rhs = pw(n1) * pw(n2) * pw(n1 + n2);
    for p in xi1.iter().chain(xi2).chain(eta1).chain(eta2) {
        rhs /= node_distance(*p, contours);
    }
    Ok(HadamardReport { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) })
}

// ---------------------------------------------------------------------------------------
// Envelopes

fn check_envelope_args(c: f64, epsilon: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("C must be positive, got {c}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Level-1 decay rate (4(1 - epsilon)/3) (h1 tau1 + x1^2)^{3/2} tau1^{-2}, clipped at zero.
pub fn level1_rate(params: &KernelParams, epsilon: f64) -> f64 {
    4.0 * (1.0 - epsilon) / 3.0 * (params.h1 * params.tau1 + params.x1 * params.x1).max(0.0).powf(1.5)
        / (params.tau1 * params.tau1)
}

fn ln_envelope(n1: usize, n2: usize, params: &KernelParams, c: f64, epsilon: f64, power: f64) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    let m = a.min(b);
    let lnp = |base: f64, e: f64| if base > 0.0 { e * base.ln() } else { 0.0 };
    (a + b) * c.ln() + 2.0 * m.ln() + lnp(a, power + a / 2.0) + lnp(b, power + b / 2.0)
        + lnp(a + b, (a + b) / 2.0)
        - a * level1_rate(params, epsilon)
}

/// C^{n1+n2} (n1∧n2)^2 n1^{2+n1/2} n2^{2+n2/2} (n1+n2)^{(n1+n2)/2} exp(-n1 rate), with the rate of
/// [`level1_rate`].
pub fn bound_envelope(n1: usize, n2: usize, params: &KernelParams, c: f64, epsilon: f64) -> Result<f64> {
    check_envelope_args(c, epsilon)?;
    if n1 < 1 || n2 < 1 {
        return Err(invalid(format!("envelope indices must be at least 1, got ({n1}, {n2})")));
    }
    Ok(ln_envelope(n1, n2, params, c, epsilon, 2.0).exp())
}

/// The envelope of T~, with the powers n^{3 + n/2}.
pub fn bound_envelope_tilde(n1: usize, n2: usize, params: &KernelParams, c: f64, epsilon: f64) -> Result<f64> {
    check_envelope_args(c, epsilon)?;
    if n1 < 1 || n2 < 1 {
        return Err(invalid(format!("envelope indices must be at least 1, got ({n1}, {n2})")));
    }
    Ok(ln_envelope(n1, n2, params, c, epsilon, 3.0).exp())
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Head (n1, n2 <= head) and tail (the rest up to `horizon`) of
/// sum envelope / (n1! n2!)^2.
pub fn envelope_sums(
    params: &KernelParams,
    c: f64,
    epsilon: f64,
    head: (usize, usize),
    horizon: usize,
    tilde: bool,
) -> Result<(f64, f64)> {
    check_envelope_args(c, epsilon)?;
    let power = if tilde { 3.0 } else { 2.0 };
    let (mut h, mut t) = (0.0, 0.0);
    for n1 in 1..=horizon {
        for n2 in 1..=horizon {
            let v = (ln_envelope(n1, n2, params, c, epsilon, power) - 2.0 * (ln_factorial(n1) + ln_factorial(n2))).exp();
            if n1 <= head.0 && n2 <= head.1 {
                h += v;
            } else {
                t += v;
            }
        }
    }
    Ok((h, t))
}

/// Partial sums S_N = sum_{n1, n2 <= N} envelope / (n1! n2!)^2 for N = 1..=horizon.
pub fn envelope_partial_sums(params: &KernelParams, c: f64, epsilon: f64, horizon: usize) -> Result<Vec<f64>> {
    check_envelope_args(c, epsilon)?;
    let mut out = Vec::with_capacity(horizon);
    let mut s = 0.0;
    for n in 1..=horizon {
        for k in 1..=n {
            for (a, b) in [(n, k), (k, n)] {
                if a == b && k != n {
                    continue;
                }
                s += (ln_envelope(a, b, params, c, epsilon, 2.0) - 2.0 * (ln_factorial(a) + ln_factorial(b))).exp();
            }
        }
        // (n, n) was added twice above.
        s -= (ln_envelope(n, n, params, c, epsilon, 2.0) - 4.0 * ln_factorial(n)).exp();
        out.push(s);
    }
    Ok(out)
}

/// Rate of the one-level series: |c_n| <= C^n n^n exp(-n rate) / (n!)^2 with
/// rate = (4(1 - epsilon)/3) (h tau + x^2)^{3/2} tau^{-2}.
fn one_point_ln_envelope(n: usize, c: f64, rate: f64) -> f64 {
    let a = n as f64;
    a * c.ln() + a * a.ln() - a * rate - 2.0 * ln_factorial(n)
}

/// Certified bound on the one-point terms beyond `n_max`, with C calibrated on the measured
/// true-scale term magnitudes. Returns infinity when nothing usable was measured.
pub fn one_point_truncation(measured: &[(usize, f64)], x: f64, tau: f64, h: f64, n_max: usize, epsilon: f64) -> f64 {
    let rate = 4.0 * (1.0 - epsilon) / 3.0 * (h * tau + x * x).max(0.0).powf(1.5) / (tau * tau);
    let c = measured
        .iter()
        .filter(|(n, v)| *n >= 1 && *v > 0.0 && v.is_finite())
        .map(|(n, v)| ((v.ln() - one_point_ln_envelope(*n, 1.0, rate)) / *n as f64).exp())
        .fold(0.0, f64::max);
    if !(c > 0.0) {
        return f64::INFINITY;
    }
    let tail: f64 = ((n_max + 1)..=ENVELOPE_HORIZON).map(|n| one_point_ln_envelope(n, c, rate).exp()).sum();
    TRUNCATION_SAFETY * tail
}

/// Certified bound on the two-point (n1, n2) terms outside n1 <= `n1_computed`,
/// n2 <= `n2_max`, with C calibrated from sup_z |T| (or |T~| when `tilde`) of the computed
/// terms and converted to z-integrated terms by `circle_factor`.
pub fn two_point_truncation(
    sup: &[(usize, usize, f64)],
    params: &KernelParams,
    n1_computed: usize,
    n2_max: usize,
    epsilon: f64,
    circle_factor: f64,
    tilde: bool,
) -> f64 {
    let power = if tilde { 3.0 } else { 2.0 };
    let c = sup
        .iter()
        .filter(|(a, b, v)| *a >= 1 && *b >= 1 && *v > 0.0 && v.is_finite())
        .map(|(a, b, v)| ((v.ln() - ln_envelope(*a, *b, params, 1.0, epsilon, power)) / (a + b) as f64).exp())
        .fold(0.0, f64::max);
    if !(c > 0.0) {
        return f64::INFINITY;
    }
    let mut tail = 0.0;
    for n1 in 1..=ENVELOPE_HORIZON {
        for n2 in 1..=ENVELOPE_HORIZON {
            if n1 <= n1_computed && n2 <= n2_max {
                continue;
            }
            tail += (ln_envelope(n1, n2, params, c, epsilon, power) - 2.0 * (ln_factorial(n1) + ln_factorial(n2))).exp();
        }
    }
    TRUNCATION_SAFETY * circle_factor * tail
}

// ---------------------------------------------------------------------------------------
// Kernel envelope check

/// One (n1, n2, parameter) comparison of |T| with the envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckRecord {
    pub n1: usize,
    pub n2: usize,
    /// sup over the z circle of |T_{n1,n2}(z)|.
    pub term_magnitude: f64,
    pub envelope: f64,
    pub ratio: f64,
    /// Constant C used for the envelope.
    pub calibrated_c: f64,
    /// Estimated quadrature error of `term_magnitude` from a coarser grid.
    pub quad_error_est: f64,
    pub params: KernelParams,
}

impl BoundCheckRecord {
    pub fn pass(&self) -> bool {
        self.ratio <= 1.0
    }
}

/// sup_z |T_{n1,n2}(z)| for n1 <= n1_max, n2 <= n2_max on the circle |z| = z_radius.
pub fn t_sup_magnitudes(params: &KernelParams, config: &SeriesConfig) -> Result<Vec<(usize, usize, f64)>> {
    let ct = series::circle_terms(params, config, series::Probe::PLAIN)?;
    Ok(ct.sup_t)
}

/// Computes sup_z |T_{n1,n2}| over the grid, calibrates C as the smallest constant for which
/// every record at the smallest h1 satisfies ratio <= 1, and evaluates all records with that
/// C.
pub fn check_t_bound(grid: &[KernelParams], config: &SeriesConfig) -> Result<Vec<BoundCheckRecord>> {
    if grid.is_empty() {
        return Err(invalid("parameter grid is empty"));
    }
    if grid.iter().any(|p| p.h1 < 4.0) {
        return Err(Error::Precondition("check_t_bound needs h1 >= 4".into()));
    }
    let cfg = SeriesConfig { estimate_error: false, ..*config };
    let mut measured = Vec::with_capacity(grid.len());
    for p in grid {
        let fine = t_sup_magnitudes(p, &cfg)?;
        let coarse = if config.estimate_error {
            Some(t_sup_magnitudes(p, &cfg.coarser())?)
        } else {
            None
        };
        measured.push((p, fine, coarse));
    }
    let h_min = grid.iter().map(|p| p.h1).fold(f64::INFINITY, f64::min);
    let mut c = 0.0f64;
    for (p, fine, _) in measured.iter().filter(|(p, _, _)| p.h1 == h_min) {
        for (a, b, v) in fine {
            let base = ln_envelope(*a, *b, p, 1.0, config.epsilon, 2.0);
            c = c.max(((v.ln() - base) / (a + b) as f64).exp());
        }
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Precondition("could not calibrate C: all measured terms vanish".into()));
    }
    let mut out = Vec::new();
    for (p, fine, coarse) in measured {
        for (k, (a, b, v)) in fine.iter().enumerate() {
            let env = bound_envelope(*a, *b, p, c, config.epsilon)?;
            let q = coarse.as_ref().map_or(0.0, |cs| (cs[k].2 - v).abs());
            out.push(BoundCheckRecord {
                n1: *a,
                n2: *b,
                term_magnitude: *v,
                envelope: env,
                ratio: v / env,
                calibrated_c: c,
                quad_error_est: q,
                params: *p,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------------------
// Combinatorics

fn binomial(n: usize, k: usize) -> f64 {
    crate::quad::binom(n as u64, k as u64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn pow_half(m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        (m as f64).powf(m as f64 / 2.0)
    }
}

/// b(k) = k! binom(n1, k) binom(n2, k) (n1 + n2 - 2k)^{(n1 + n2 - 2k)/2}.
pub fn b_k(n1: usize, n2: usize, k: usize) -> Result<f64> {
    if k > n1.min(n2) {
        return Err(invalid(format!("k = {k} exceeds n1 ∧ n2 = {}", n1.min(n2))));
    }
    Ok(factorial(k) * binomial(n1, k) * binomial(n2, k) * pow_half(n1 + n2 - 2 * k))
}

/// True iff b(k + 1) <= b(k) for every 1 <= k < n1 ∧ n2. The pair (1, 1) and pairs with a
/// zero index are outside the claim.
pub fn b_monotone(n1: usize, n2: usize) -> Result<bool> {
    if n1 == 0 || n2 == 0 || (n1, n2) == (1, 1) {
        return Err(Error::Precondition(format!("b(k) monotonicity is not claimed for ({n1}, {n2})")));
    }
    for k in 1..n1.min(n2) {
        if b_k(n1, n2, k + 1)? > b_k(n1, n2, k)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pairs k < n1 ∧ n2 with b(k + 1) > b(k), with the ratio b(k + 1)/b(k).
pub fn b_monotone_violations(n1: usize, n2: usize) -> Vec<(usize, f64)> {
    (1..n1.min(n2))
        .filter_map(|k| {
            let r = b_k(n1, n2, k + 1).ok()? / b_k(n1, n2, k).ok()?;
            (r > 1.0).then_some((k, r))
        })
        .collect()
}

/// Checks k! l! binom(n1,k) binom(n2,k) binom(n1,l) binom(n2,l) (n1+n2-2k-2l)^{(n1+n2-2k-2l)/2}
/// <= 4^{n1+n2} b(k + l) for all k, l >= 1 with k + l <= n1 ∧ n2. Returns the violating
/// (k, l) pairs.
pub fn four_power_violations(n1: usize, n2: usize) -> Vec<(usize, usize)> {
    let m = n1.min(n2);
    let mut out = Vec::new();
    for k in 1..=m {
        for l in 1..=(m - k) {
            let lhs = factorial(k)
                * factorial(l)
                * binomial(n1, k)
                * binomial(n2, k)
                * binomial(n1, l)
                * binomial(n2, l)
                * pow_half(n1 + n2 - 2 * k - 2 * l);
            let rhs = 4f64.powi((n1 + n2) as i32) * b_k(n1, n2, k + l).unwrap_or(f64::NAN);
            if !(lhs <= rhs) {
                out.push((k, l));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------------------
// Steepest-descent distance estimate

/// A point of the scaled steepest-descent contour x = -sqrt(1 + y^2/3) (left half plane).
pub fn sd_point(y: f64) -> C64 {
    C64::new(-(1.0 + y * y / 3.0).sqrt(), y)
}

/// min over sampled pairs (z, z1) of the scaled contour of |h* z - h~ z1| |z1| / h*.
///
/// z1 is drawn with |y1| stratified over the bands [0, 1], [1, 10] and [10, 100] and z with
/// |y| uniform on [0, 100]; each band gets a third of the samples. Band edges are always
/// included.
pub fn contour_distance_check(h_star: f64, h_tilde: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(h_tilde > 0.0) {
        return Err(invalid(format!("h~ must be positive, got {h_tilde}")));
    }
    if !(h_star >= 1.0_f64.max(2.0 * h_tilde)) {
        return Err(Error::Precondition(format!("need h* >= max(1, 2 h~), got h* = {h_star}, h~ = {h_tilde}")));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let mut rng = SplitMix64::new(seed);
    let bands = [(0.0, 1.0), (1.0, 10.0), (10.0, 100.0)];
    let ratio = |z: C64, z1: C64| (h_star * z - h_tilde * z1).norm() * z1.norm() / h_star;
    let mut best = f64::INFINITY;
    for (bi, (lo, hi)) in bands.iter().enumerate() {
        let n = samples / 3 + usize::from(bi < samples % 3);
        for k in 0..n.max(1) {
            let y1 = match k {
                0 => *lo,
                1 => *hi,
                _ => rng.uniform(*lo, *hi),
            };
            let s1 = if rng.next_u64() & 1 == 1 { 1.0 } else { -1.0 };
            let z1 = sd_point(s1 * y1);
            let s = if rng.next_u64() & 1 == 1 { 1.0 } else { -1.0 };
            let z = sd_point(s * rng.uniform(0.0, 100.0));
            best = best.min(ratio(z, z1));
            // The closest point of the outer contour to h~ z1 / h* is also tried.
            best = best.min(ratio(nearest_sd(h_tilde / h_star * z1), z1));
        }
    }
    Ok(best)
}

/// Point of the scaled contour closest to w, by golden-section search in y.
fn nearest_sd(w: C64) -> C64 {
    let d = |y: f64| (sd_point(y) - w).norm();
    let (mut a, mut b) = (w.im - 4.0 - w.norm(), w.im + 4.0 + w.norm());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if d(c) < d(e) {
            b = e;
        } else {
            a = c;
        }
    }
    sd_point(0.5 * (a + b))
}
