//! Numerical laboratory for the Baouendi-Grushin operator
//! `Delta_X = Delta_x + |x|^{2 alpha} Delta_y` on `R^m x R^n`.
//!
//! The crate covers the gauge geometry, a catalog of test fields, gauge-ball
//! quadrature, checks of the weighted Hardy and Rellich inequalities, the
//! frequency function of the fourth-order equation `Delta_X^2 u = V u`, and a
//! finite-difference solver for that equation under bi-radial symmetry.

pub mod error;
pub mod fields;
pub mod frequency;
pub mod geometry;
pub mod hardy;
pub mod quadrature;
pub mod solver;
pub mod taylor;

pub use error::{Error, Result};
pub use fields::{AnalyticField, FieldMeta, FieldRef, GridField, GridSpec};
pub use geometry::{Jet, Point, SpaceParams};
pub use quadrature::{Method, QuadSettings, Quadrature, QuadratureResult, Weight};
