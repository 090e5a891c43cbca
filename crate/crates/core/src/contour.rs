//! The nested ray contours and their quadrature grids.
//!
//! Each contour is the union of two rays leaving a real anchor. Rays are parametrized as
//! `anchor + 2 u e^{±i theta}` with `u >= 0`, so that the cubic part of the weight decays
//! like `exp(-(8/3) tau u^3)` along either ray.

use crate::error::{invalid, Error, Result};
use crate::params::KernelParams;
use crate::quad::gauss_legendre_on;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type ComplexPoint = C64;

/// Which of the six contours a ray pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    LeftIn,
    Left,
    LeftOut,
    RightOut,
    Right,
    RightIn,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::LeftIn,
        Family::Left,
        Family::LeftOut,
        Family::RightOut,
        Family::Right,
        Family::RightIn,
    ];

    pub fn is_left(self) -> bool {
        matches!(self, Family::LeftIn | Family::Left | Family::LeftOut)
    }

    /// Opening angle of the upper ray: 2 pi / 3 on the left, pi / 3 on the right.
    pub fn angle(self) -> f64 {
        if self.is_left() {
            2.0 * PI / 3.0
        } else {
            PI / 3.0
        }
    }

    fn index(self) -> usize {
        Family::ALL.iter().position(|f| *f == self).unwrap()
    }
}

/// Two rays from `anchor` at angles ±theta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayContour {
    pub anchor: ComplexPoint,
    pub family: Family,
}

impl RayContour {
    /// Unit-speed-times-two direction of the upper (`upper = true`) or lower ray.
    pub fn direction(&self, upper: bool) -> C64 {
        let th = self.family.angle();
        C64::from_polar(2.0, if upper { th } else { -th })
    }

    pub fn point(&self, u: f64, upper: bool) -> C64 {
        self.anchor + self.direction(upper) * u
    }
}

/// The six nested contours.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourFamily {
    pub contours: [RayContour; 6],
    /// Smallest real-axis gap between adjacent anchors on the same side.
    pub separation: f64,
}

impl ContourFamily {
    /// Assemble from the six real anchors, in the order of [`Family::ALL`].
    pub fn from_anchors(anchors: [f64; 6]) -> Result<Self> {
        let ordered = anchors[0] < anchors[1]
            && anchors[1] < anchors[2]
            && anchors[2] < 0.0
            && 0.0 < anchors[3]
            && anchors[3] < anchors[4]
            && anchors[4] < anchors[5];
        if !ordered {
            return Err(invalid(format!("contour anchors are not nested: {anchors:?}")));
        }
        let contours = std::array::from_fn(|i| RayContour {
            anchor: C64::new(anchors[i], 0.0),
            family: Family::ALL[i],
        });
        let separation = [
            anchors[1] - anchors[0],
            anchors[2] - anchors[1],
            anchors[4] - anchors[3],
            anchors[5] - anchors[4],
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        Ok(Self { contours, separation })
    }

    pub fn get(&self, f: Family) -> &RayContour {
        &self.contours[f.index()]
    }

    pub fn anchors(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.contours[i].anchor.re)
    }

    pub fn is_nested(&self) -> bool {
        let a = self.anchors();
        a[0] < a[1] && a[1] < a[2] && a[2] < 0.0 && 0.0 < a[3] && a[3] < a[4] && a[4] < a[5]
    }

    /// Minimum distance between any two distinct contours, rays truncated at `u_max`.
    pub fn min_pairwise_distance(&self, u_max: f64) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..6 {
            for j in (i + 1)..6 {
                best = best.min(contour_distance(&self.contours[i], &self.contours[j], u_max));
            }
        }
        best
    }
}

fn contour_distance(a: &RayContour, b: &RayContour, u_max: f64) -> f64 {
    let mut best = f64::INFINITY;
    for ua in [false, true] {
        for ub in [false, true] {
            let (p0, p1) = (a.anchor, a.point(u_max, ua));
            let (q0, q1) = (b.anchor, b.point(u_max, ub));
            best = best.min(segment_distance(p0, p1, q0, q1));
        }
    }
    best
}

fn segment_distance(p0: C64, p1: C64, q0: C64, q1: C64) -> f64 {
    if segments_intersect(p0, p1, q0, q1) {
        return 0.0;
    }
    point_segment(p0, q0, q1)
        .min(point_segment(p1, q0, q1))
        .min(point_segment(q0, p0, p1))
        .min(point_segment(q1, p0, p1))
}

fn point_segment(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let t = ((p - a) * ab.conj()).re / ab.norm_sqr();
    let t = t.clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_intersect(p0: C64, p1: C64, q0: C64, q1: C64) -> bool {
    let d1 = cross(p1 - p0, q0 - p0);
    let d2 = cross(p1 - p0, q1 - p0);
    let d3 = cross(q1 - q0, p0 - q0);
    let d4 = cross(q1 - q0, p1 - q0);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn saddle_radius(h: f64, x: f64, tau: f64) -> f64 {
    (h / tau + x * x / (tau * tau)).max(0.0).sqrt()
}

/// Level-2 offset c = (epsilon / 20) tau2^{-1} sqrt(h2 tau2 + x2^2).
pub fn paper_offset(params: &KernelParams, epsilon: f64) -> f64 {
    epsilon / 20.0 / params.tau2 * (params.h2 * params.tau2 + params.x2 * params.x2).sqrt()
}

/// The saddle-anchored family: level-2 anchors at ∓S2 ∓ {-c, 0, c}, level-1 anchors at ∓S1,
/// with the level-1 anchor clamped into the corridor `[S2 - c/2, S2 + c/2]` (mirrored on the
/// left) whenever it would not sit at least c/2 inside the in/out corridor.
pub fn build_contours(params: &KernelParams, epsilon: f64) -> Result<ContourFamily> {
    params.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let q = params.h2 * params.tau2 + params.x2 * params.x2;
    if !(q > 0.0) {
        return Err(invalid(format!("need h2 tau2 + x2^2 > 0, got {q}")));
    }
    let s2 = saddle_radius(params.h2, params.x2, params.tau2);
    let c = paper_offset(params, epsilon);
    let s1 = saddle_radius(params.h1, params.x1, params.tau1);
    let lo = s2 - 0.5 * c;
    let hi = s2 + 0.5 * c;
    let a1 = if s1 > lo && s1 < hi { s1 } else { s1.clamp(lo, hi) };
    if s2 - c <= 0.0 {
        return Err(Error::Precondition(format!(
            "outer anchors cross the imaginary axis (S2 = {s2}, c = {c})"
        )));
    }
    ContourFamily::from_anchors([-s2 - c, -a1, -s2 + c, s2 - c, a1, s2 + c])
}

/// Placement used by the evaluators. Integrals are invariant under admissible deformations,
/// so the quadrature is free to use a wider corridor than the saddle-anchored family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    /// Half width of the level-2 corridor (distance between in, middle and out anchors).
    pub gap: f64,
    /// Smallest admissible |anchor|.
    pub floor: f64,
}

impl Default for Layout {
    fn default() -> Self {
        Self { gap: 0.7, floor: 0.5 }
    }
}

impl Layout {
    /// Nested family for the full z-dependent kernels. The level-1 contour sits in the middle
    /// of the level-2 corridor, displaced toward its own saddle by at most gap / 2.
    pub fn nested(&self, params: &KernelParams) -> Result<ContourFamily> {
        let s2 = saddle_radius(params.h2, params.x2, params.tau2);
        let a2 = s2.max(self.gap + self.floor);
        let s1 = saddle_radius(params.h1, params.x1, params.tau1);
        let a1 = s1.clamp(a2 - 0.5 * self.gap, a2 + 0.5 * self.gap);
        ContourFamily::from_anchors([
            -a2 - self.gap,
            -a1,
            -a2 + self.gap,
            a2 - self.gap,
            a1,
            a2 + self.gap,
        ])
    }

    /// Family for the z-integrated n1 = 1 channel, where only the out contours of level 2
    /// remain. The level-1 contour can then sit at its saddle, left of Gamma_{L,out}.
    pub fn dominant(&self, params: &KernelParams) -> Result<ContourFamily> {
        let s2 = saddle_radius(params.h2, params.x2, params.tau2);
        let a_out = s2.max(self.floor);
        let s1 = saddle_radius(params.h1, params.x1, params.tau1);
        let a1 = s1.max(a_out + self.gap);
        ContourFamily::from_anchors([
            -a1 - self.gap,
            -a1,
            -a_out,
            a_out,
            a1,
            a1 + self.gap,
        ])
    }

    /// Single pair of contours for a one-level integral at (x, tau, h).
    pub fn single(&self, x: f64, tau: f64, h: f64) -> f64 {
        saddle_radius(h, x, tau).max(self.floor)
    }
}

/// Kind of quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridKind {
    RayPair,
    Circle,
}

/// Nodes and weights; weights already contain the direction factor and 1/(2 pi i).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<ComplexPoint>,
    pub weights: Vec<C64>,
    /// Ray parameter u of each node (empty for circles).
    pub params: Vec<f64>,
    pub u_max: f64,
    pub kind: GridKind,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sum of w_k g(z_k) in fixed pairwise order.
    pub fn integrate<F: Fn(C64) -> C64>(&self, g: F) -> C64 {
        let terms: Vec<C64> = self.nodes.iter().zip(&self.weights).map(|(z, w)| g(*z) * w).collect();
        crate::quad::pairwise_sum(&terms)
    }
}

/// Truncation length: exp(-(8/3) tau u^3) <= tail_tol.
pub fn truncation_length(decay_tau: f64, tail_tol: f64) -> f64 {
    (3.0 * (1.0 / tail_tol).ln() / (8.0 * decay_tau)).cbrt()
}

/// Gauss-Legendre rule on [0, u_max] along both rays of `contour`, oriented from the
/// lower ray inward and then out along the upper ray.
pub fn ray_quadrature(
    contour: &RayContour,
    decay_tau: f64,
    nodes_per_ray: usize,
    tail_tol: f64,
) -> Result<QuadratureGrid> {
    ray_quadrature_panels(contour, decay_tau, nodes_per_ray, tail_tol, 1)
}

/// As [`ray_quadrature`], with each ray split into `panels` equal panels; `nodes_per_ray`
/// is the total per ray and is rounded up to a multiple of `panels`.
pub fn ray_quadrature_panels(
    contour: &RayContour,
    decay_tau: f64,
    nodes_per_ray: usize,
    tail_tol: f64,
    panels: usize,
) -> Result<QuadratureGrid> {
    if !(decay_tau > 0.0) {
        return Err(invalid(format!("decay_tau must be positive, got {decay_tau}")));
    }
    if nodes_per_ray < 4 {
        return Err(invalid(format!("need at least 4 nodes per ray, got {nodes_per_ray}")));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid(format!(
            "tail_tol must lie in (0, 1), got {tail_tol}; an empty ray grid is not admissible"
        )));
    }
    let panels = panels.max(1);
    let per_panel = nodes_per_ray.div_ceil(panels);
    let u_max = truncation_length(decay_tau, tail_tol);
    let mut us = Vec::new();
    let mut ws = Vec::new();
    for p in 0..panels {
        let a = u_max * p as f64 / panels as f64;
        let b = u_max * (p + 1) as f64 / panels as f64;
        let (u, w) = gauss_legendre_on(per_panel, a, b);
        us.extend(u);
        ws.extend(w);
    }
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let mut nodes = Vec::with_capacity(2 * us.len());
    let mut weights = Vec::with_capacity(2 * us.len());
    let mut params = Vec::with_capacity(2 * us.len());
    // Lower ray traversed inward: parameter decreasing, orientation sign -1.
    let dl = contour.direction(false);
    for k in (0..us.len()).rev() {
        nodes.push(contour.anchor + dl * us[k]);
        weights.push(-dl * ws[k] / two_pi_i);
        params.push(us[k]);
    }
    let du = contour.direction(true);
    for k in 0..us.len() {
        nodes.push(contour.anchor + du * us[k]);
        weights.push(du * ws[k] / two_pi_i);
        params.push(us[k]);
    }
    Ok(QuadratureGrid { nodes, weights, params, u_max, kind: GridKind::RayPair })
}

/// Ray rule whose truncation also follows the actual weight: `log_weight(zeta)` is
/// ln|w(zeta)| of the integrand factor attached to this contour. Each ray is cut where the
/// weight has dropped below `tail_tol` times its maximum on the ray (never beyond the cubic
/// bound of [`truncation_length`]).
pub fn ray_quadrature_weighted<F: Fn(C64) -> f64>(
    contour: &RayContour,
    decay_tau: f64,
    nodes_per_ray: usize,
    tail_tol: f64,
    log_weight: F,
) -> Result<QuadratureGrid> {
    let mut grid = ray_quadrature(contour, decay_tau, nodes_per_ray, tail_tol)?;
    let cubic = grid.u_max;
    const SCAN: usize = 400;
    let cut = tail_tol.ln();
    let mut u_cut: f64 = 0.0;
    for upper in [false, true] {
        let vals: Vec<f64> = (0..=SCAN)
            .map(|k| log_weight(contour.point(cubic * k as f64 / SCAN as f64, upper)))
            .collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let last = vals.iter().rposition(|v| *v - top > cut).unwrap_or(0);
        u_cut = u_cut.max(cubic * ((last + 1).min(SCAN)) as f64 / SCAN as f64);
    }
    if u_cut < cubic {
        rescale(&mut grid, contour, u_cut / cubic);
    }
    Ok(grid)
}

fn rescale(grid: &mut QuadratureGrid, contour: &RayContour, factor: f64) {
    for k in 0..grid.len() {
        let u = grid.params[k] * factor;
        let upper = k >= grid.len() / 2;
        grid.params[k] = u;
        grid.nodes[k] = contour.point(u, upper);
        grid.weights[k] *= factor;
    }
    grid.u_max *= factor;
}
