//! Pseudo-Finsler geometry at tangent-bundle sample points.
//!
//! A Finsler Lagrangian `L(x, ẋ)` is evaluated once as a fourth-order jet in
//! the `2n` variables `(x, ẋ)`; the L-metric, spray, nonlinear connection,
//! Chern–Rund connection and hh-curvature are all read off that jet. On top
//! of this sit Berwald detection, the Ricci skew part that obstructs
//! metrizability, closed forms for the `(α, β)` family and a small catalog of
//! named geometries.

pub mod alphabeta;
pub mod berwald;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jets;
pub mod linalg;

pub use error::{DomainKind, Error, Result};
