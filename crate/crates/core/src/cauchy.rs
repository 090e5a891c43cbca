//! Vandermonde-type products, Cauchy factors and the inter-level coupling ratio.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Δ(W) = prod_{i < j} (w_j - w_i).
pub fn delta(w: &[C64]) -> C64 {
    let mut p = C64::new(1.0, 0.0);
    for j in 0..w.len() {
        for i in 0..j {
            p *= w[j] - w[i];
        }
    }
    p
}

/// Δ(W; W') = prod_{i, i'} (w_i - w'_{i'}).
pub fn delta_cross(w: &[C64], wp: &[C64]) -> C64 {
    let mut p = C64::new(1.0, 0.0);
    for a in w {
        for b in wp {
            p *= a - b;
        }
    }
    p
}

fn check_distinct(w: &[C64], wp: &[C64]) -> Result<()> {
    if w.iter().any(|a| wp.iter().any(|b| a == b)) {
        return Err(Error::Coincident);
    }
    Ok(())
}

/// C(W; W') = Δ(W) Δ(W') / Δ(W; W').
pub fn cauchy_factor(w: &[C64], wp: &[C64]) -> Result<C64> {
    check_distinct(w, wp)?;
    Ok(delta(w) * delta(wp) / delta_cross(w, wp))
}

/// det[1 / (w_i - w'_j)] for two vectors of equal length.
pub fn cauchy_det(w: &[C64], wp: &[C64]) -> Result<C64> {
    assert_eq!(w.len(), wp.len(), "Cauchy determinant needs square data");
    check_distinct(w, wp)?;
    if w.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(DMatrix::from_fn(w.len(), wp.len(), |i, j| 1.0 / (w[i] - wp[j])).determinant())
}

/// The coupling ratio Δ(ξ¹; η²) Δ(η¹; ξ²) / (Δ(ξ¹; ξ²) Δ(η¹; η²)), computed by the product
/// formula and, independently, as a ratio of Cauchy determinants: with rows (ξ¹, η²) and
/// columns (η¹, ξ²) the combined Cauchy matrix B satisfies
/// `ratio = (-1)^{n2 + n1 n2} C(rows; cols) / (C(ξ¹; η¹) C(ξ²; η²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub product: C64,
    pub block: C64,
}

pub fn coupling_factor(xi1: &[C64], xi2: &[C64], eta1: &[C64], eta2: &[C64]) -> Result<Coupling> {
    check_distinct(xi1, eta2)?;
    check_distinct(eta1, xi2)?;
    check_distinct(xi1, xi2)?;
    check_distinct(eta1, eta2)?;
    let product = delta_cross(xi1, eta2) * delta_cross(eta1, xi2)
        / (delta_cross(xi1, xi2) * delta_cross(eta1, eta2));
    let (n1, n2) = (xi1.len(), xi2.len());
    let rows: Vec<C64> = xi1.iter().chain(eta2).copied().collect();
    let cols: Vec<C64> = eta1.iter().chain(xi2).copied().collect();
    let n = rows.len();
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    // C(W; W') = (-1)^{n(n-1)/2} det[1 / (w_i - w'_j)].
    let c = |a: &[C64], b: &[C64], m: usize| -> Result<C64> {
        Ok(cauchy_det(a, b)? * sign(m * m.saturating_sub(1) / 2))
    };
    let block = c(&rows, &cols, n)? * sign(n2 + n1 * n2) / (c(xi1, eta1, n1)? * c(xi2, eta2, n2)?);
    Ok(Coupling { product, block })
}
