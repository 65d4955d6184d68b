//! Certification and numerical location of the unique limit cycle of
//! planar systems `ẍ + ẋ·φ(x, ẋ) + g(x) = 0`.
//!
//! - [`expr`]: parser and evaluator for user-supplied `φ` and `g`.
//! - [`model`]: the planar system, its scalar fields, and the
//!   Conti–Filippov reduction for nonlinear `g`.
//! - [`certify`]: sampling-based checks of the uniqueness and attraction
//!   hypotheses.
//! - [`dynamics`]: integration, return map, cycle location.
//! - [`geometry`]: zero-angular-speed curve, ray and radial checks, basin
//!   probing.

pub mod error;
pub mod expr;
pub mod model;
pub mod dynamics;
pub mod certify;
pub mod geometry;

pub use error::{Error, Result};
