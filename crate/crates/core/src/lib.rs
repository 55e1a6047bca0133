//! Numerics for the Willmore index of inverted minimal surfaces with planar ends.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl, clippy::needless_range_loop)]

pub mod basis;
pub mod catalog;
pub mod chart;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod quadrature;
pub mod rational;
pub mod richardson;
pub mod s3;
pub mod variation;
pub mod weierstrass;

pub use error::{Result, WillmoreError};
