//! Numerical verification toolkit for almost para-quaternionic structures on
//! coordinate charts.
//!
//! Structures are given by an admissible basis `(J1, J2, J3)` of endomorphism
//! fields with symbolic coefficients. Every tensor invariant is evaluated
//! pointwise from exact first derivatives, so integrability questions reduce
//! to residuals at sample points.

pub mod error;
mod linalg;
pub mod expr;
pub mod geometry;
pub mod tensorcalc;
pub mod connections;
pub mod integrability;
pub mod twistorspace;

pub use error::{Error, Result};
