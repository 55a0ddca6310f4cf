//! Cylindrically symmetric Finsler metrics `F = |ȳ|·φ(x⁰, z, r, s)` on
//! `I × Bⁿ(ρ)`.
//!
//! The crate evaluates such metrics, checks the positivity conditions that
//! make them Finsler, computes the fundamental tensor and geodesic spray in
//! closed form next to independent numerical oracles, and measures
//! projective flatness through PDE residuals, Hamel's equations and
//! geodesic straightness.
//!
//! Module map:
//!
//! - [`expr`]: expression language with exact second-order jets
//! - [`phi`], [`geometry`]: φ backends, coordinate reduction, symmetry checks
//! - [`tensor`]: Ω, Λ, `g_AB`, determinant identity, inverse, Finsler validation
//! - [`spray`], [`geodesic`]: spray coefficients and RK4 geodesics
//! - [`quadrature`], [`flatness`], [`family`]: flatness residuals and solution families
//! - [`catalog`]: built-in metrics
//! - [`grid`], [`specfile`], [`report`]: sampling, spec files and JSON reports

// `!(v > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod expr;
pub mod family;
pub mod flatness;
pub mod geodesic;
pub mod geometry;
pub mod grid;
pub mod phi;
pub mod quadrature;
pub mod report;
pub mod specfile;
pub mod spray;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::{BasePoint, FinslerNorm, MetricSpec, Tangent};
pub use phi::{PartialSet, PhiFunction, PhiPoint};
