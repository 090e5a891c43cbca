//! Truncated Taylor arithmetic in one perturbation parameter, for scalars and matrices.
//!
//! A jet of order k stores the coefficients c_0, ..., c_k of `c_0 + c_1 e + ... + c_k e^k`.
//! Order 0 is plain arithmetic; order 1 carries first derivatives; order 2 carries
//! second derivatives as `2 c_2`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet(pub Vec<C64>);

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet(vec![C64::new(0.0, 0.0); order + 1])
    }

    pub fn constant(order: usize, v: C64) -> Self {
        let mut j = Self::zero(order);
        j.0[0] = v;
        j
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn value(&self) -> C64 {
        self.0[0]
    }

    /// k-th derivative with respect to the perturbation parameter.
    pub fn derivative(&self, k: usize) -> C64 {
        self.0.get(k).copied().unwrap_or_default() * factorial(k)
    }

    pub fn scale(&self, s: C64) -> Self {
        Jet(self.0.iter().map(|c| c * s).collect())
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.iter().map(|a| -a).collect())
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.0.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..(n - i) {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(out)
    }
}

/// Matrix-valued jet.
#[derive(Debug, Clone, PartialEq)]
pub struct JetMatrix(pub Vec<DMatrix<C64>>);

impl JetMatrix {
    pub fn zeros(order: usize, rows: usize, cols: usize) -> Self {
        JetMatrix(vec![DMatrix::zeros(rows, cols); order + 1])
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn nrows(&self) -> usize {
        self.0[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0[0].ncols()
    }

    pub fn mul(&self, o: &JetMatrix) -> JetMatrix {
        let n = self.0.len();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = DMatrix::zeros(self.nrows(), o.ncols());
            for i in 0..=k {
                acc += &self.0[i] * &o.0[k - i];
            }
            out.push(acc);
        }
        JetMatrix(out)
    }

    /// Plain matrix on the left.
    pub fn left_mul(m: &DMatrix<C64>, o: &JetMatrix) -> JetMatrix {
        JetMatrix(o.0.iter().map(|b| m * b).collect())
    }

    pub fn add_assign(&mut self, o: &JetMatrix) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a += b;
        }
    }

    pub fn scale(&self, s: C64) -> JetMatrix {
        JetMatrix(self.0.iter().map(|a| a * s).collect())
    }

    pub fn transpose(&self) -> JetMatrix {
        JetMatrix(self.0.iter().map(|a| a.transpose()).collect())
    }

    pub fn trace(&self) -> Jet {
        Jet(self.0.iter().map(|a| a.trace()).collect())
    }

    /// tr(A B) without forming the product.
    pub fn trace_of_product(&self, o: &JetMatrix) -> Jet {
        let n = self.0.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..(n - i) {
                out[i + j] += self.0[i].component_mul(&o.0[j].transpose()).sum();
            }
        }
        Jet(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        // (1 + 2e)(3 + e) = 3 + 7e + 2e^2.
        let a = Jet(vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        let b = Jet(vec![C64::new(3.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let p = &a * &b;
        assert_eq!(p.0, vec![C64::new(3.0, 0.0), C64::new(7.0, 0.0), C64::new(2.0, 0.0)]);
        assert_eq!(p.derivative(2), C64::new(4.0, 0.0));
    }
}
