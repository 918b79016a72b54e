use std::fmt;
use std::sync::Arc;

use super::quadrature::gauss_rule;
use super::topology::{side_spans, side_tangent, Side};
use super::{ModelError, MultiPatchModel};

pub type ScalarField = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

pub fn scalar_field(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> ScalarField {
    Arc::new(f)
}

pub fn vector_field(f: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> VectorField {
    Arc::new(f)
}

/// A side of a patch, optionally restricted to a running-parameter interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySelection {
    pub patch: usize,
    pub side: Side,
    pub range: Option<(f64, f64)>,
}

impl BoundarySelection {
    pub fn side(patch: usize, side: Side) -> Self {
        Self { patch, side, range: None }
    }
}

/// Prescribed behaviour on a boundary region.
#[derive(Clone)]
pub enum BoundaryKind {
    /// Displacement (or deflection in the first component) prescribed weakly.
    Dirichlet(VectorField),
    /// Only the normal displacement prescribed weakly; tangential traction free.
    NormalDirichlet(ScalarField),
    Neumann(VectorField),
    /// Prescribed plate rotation about the tangent, `-dw/dn`.
    SymmetryRotation(ScalarField),
    /// Zero deflection imposed on the boundary control points.
    SimplySupported,
    Contact(usize),
    Free,
}

impl fmt::Debug for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryKind::Dirichlet(_) => "Dirichlet",
            BoundaryKind::NormalDirichlet(_) => "NormalDirichlet",
            BoundaryKind::Neumann(_) => "Neumann",
            BoundaryKind::SymmetryRotation(_) => "SymmetryRotation",
            BoundaryKind::SimplySupported => "SimplySupported",
            BoundaryKind::Contact(id) => return write!(f, "Contact({id})"),
            BoundaryKind::Free => "Free",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryTag {
    pub selection: BoundarySelection,
    pub kind: BoundaryKind,
}

/// Quadrature point on a patch boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub patch: usize,
    pub side: Side,
    pub param: [f64; 2],
    pub point: [f64; 2],
    pub normal: [f64; 2],
    /// Gauss weight times the arc-length Jacobian.
    pub weight: f64,
}

/// Gauss points on a boundary selection, `n` per element edge (default `p + 1`).
pub fn boundary_quadrature(
    model: &MultiPatchModel,
    selection: &BoundarySelection,
    n: Option<usize>,
) -> Result<Vec<BoundaryPoint>, ModelError> {
    let patch = model.patch(selection.patch)?;
    if patch.dim() != 2 {
        return Err(ModelError::Tag("boundary quadrature needs a surface patch".into()));
    }
    let side = selection.side;
    let n = n.unwrap_or(patch.degree(side.running_dir()) + 1);
    let rule = gauss_rule(n)?;
    let mut out = Vec::new();
    for (a, b) in side_spans(patch, side) {
        let (a, b) = match selection.range {
            Some((lo, hi)) => (a.max(lo), b.min(hi)),
            None => (a, b),
        };
        if b <= a {
            continue;
        }
        for (s, w) in rule.mapped(a, b) {
            let (x, t, det) = side_tangent(patch, side, s)?;
            let len = t[0].hypot(t[1]);
            out.push(BoundaryPoint {
                patch: selection.patch,
                side,
                param: side.param(patch, s),
                point: x,
                normal: side.outward_normal(t, det),
                weight: w * len,
            });
        }
    }
    Ok(out)
}

/// Checks that tags on the same side do not overlap.
pub fn validate_tags(model: &MultiPatchModel) -> Result<(), ModelError> {
    let tags = model.tags();
    for (i, a) in tags.iter().enumerate() {
        let pa = model.patch(a.selection.patch)?;
        if pa.dim() != 2 {
            return Err(ModelError::Tag(format!("tag {i} refers to a curve patch")));
        }
        let full_a = pa.param_range(a.selection.side.running_dir());
        let ra = a.selection.range.unwrap_or(full_a);
        if ra.1 <= ra.0 || ra.0 < full_a.0 - 1e-12 || ra.1 > full_a.1 + 1e-12 {
            return Err(ModelError::Tag(format!("tag {i} has an invalid parameter range")));
        }
        for (j, b) in tags.iter().enumerate().skip(i + 1) {
            if a.selection.patch != b.selection.patch || a.selection.side != b.selection.side {
                continue;
            }
            let rb = b.selection.range.unwrap_or(full_a);
            if ra.0.max(rb.0) < ra.1.min(rb.1) {
                return Err(ModelError::Tag(format!(
                    "tags {i} and {j} overlap on patch {} side {}",
                    a.selection.patch, a.selection.side
                )));
            }
        }
    }
    Ok(())
}
