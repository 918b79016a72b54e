//! B-spline and NURBS bases, exact conic geometries and knot insertion.

mod geometry;
mod io;
mod knots;
mod patch;

pub use geometry::{make_geometry, GeometryKind};
pub use io::{patch_from_text, patch_to_text};
pub use knots::{eval_basis_1d, BasisEval, KnotVector};
pub use patch::{CurvePoint, NurbsPatch, SurfacePoint};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("parameter {value} outside knot range [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error("singular geometry Jacobian at (u, v) = ({u}, {v})")]
    SingularJacobian { u: f64, v: f64 },
    #[error("cannot construct geometry: {0}")]
    Construction(String),
    #[error("patch text, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Same as [`NurbsPatch::eval`].
pub fn eval_nurbs(patch: &NurbsPatch, u: f64, v: f64) -> Result<SurfacePoint, SplineError> {
    patch.eval(u, v)
}

/// Same as [`NurbsPatch::h_refine`].
pub fn h_refine(patch: &NurbsPatch, subdivisions: &[usize]) -> Result<NurbsPatch, SplineError> {
    patch.h_refine(subdivisions)
}
