//! On-line density estimation for exponential families, on-line ridge
//! regression, and numeric verification of the exact regret identities and
//! bounds both satisfy.
//!
//! The crate is generic over the scalar type through [`Scalar`] (satisfied
//! by `f32` and `f64`); the `*64` aliases at the root fix `f64` for callers
//! that don't care.

// `!(x > 0)` is deliberate where it appears: unlike `x <= 0` it is also
// true for NaN, which must fail the same guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bregman;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiment;
pub mod families;
pub mod generate;
pub mod linalg;
pub mod mixture;
pub mod online;
pub mod plot;
pub mod quadrature;
pub mod regression;
pub mod regret;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Family64 = families::Family<f64>;
pub type NaturalParam64 = families::NaturalParam<f64>;
pub type ExpectationParam64 = families::ExpectationParam<f64>;
pub type Example64 = families::Example<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type EstimatorState64 = online::EstimatorState<f64>;
pub type Trace64 = online::Trace<f64>;
pub type RegretReport64 = regret::RegretReport<f64>;
pub type RegressionState64 = regression::RegressionState<f64>;
pub type RegressionTrace64 = regression::RegressionTrace<f64>;
pub type LabeledExample64 = regression::LabeledExample<f64>;
