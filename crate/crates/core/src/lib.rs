//! Numerical evaluation of the one-point, two-point and conditional laws of the KPZ fixed
//! point with step initial data, through their contour-integral series.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod airy;
pub mod bounds;
pub mod cauchy;
pub mod conditional;
pub mod contour;
pub mod error;
pub mod jet;
pub mod params;
pub mod quad;
pub mod series;
pub mod tracy_widom;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use params::{ConditionalParams, KernelParams};
