//! Bifurcation of gap solitons from spectral-gap edges of periodic Schrödinger operators.

// `!(x > 0.0)` is used on purpose so that NaN is rejected together with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blochtest;
pub mod domain;
pub mod branch;
pub mod linalg;
pub mod lpcheck;
pub mod nonlinearity;
pub mod report;
pub mod solver;
pub mod spectral;
pub mod suites;
