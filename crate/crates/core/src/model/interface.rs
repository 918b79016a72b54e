use crate::splines::NurbsPatch;

use super::quadrature::gauss_rule;
use super::topology::{side_spans, side_tangent, Side};
use super::{ModelError, MultiPatchModel};

/// Two patch sides that occupy the same physical curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceSpec {
    pub first: (usize, Side),
    pub second: (usize, Side),
}

impl InterfaceSpec {
    pub fn new(patch1: usize, side1: Side, patch2: usize, side2: Side) -> Self {
        Self { first: (patch1, side1), second: (patch2, side2) }
    }

    pub fn swapped(&self) -> Self {
        Self { first: self.second, second: self.first }
    }
}

/// Matched quadrature point on an interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePoint {
    pub param1: [f64; 2],
    pub param2: [f64; 2],
    pub point: [f64; 2],
    pub weight: f64,
    /// Outward normal of the first side.
    pub normal1: [f64; 2],
    /// Outward normal of the second side.
    pub normal2: [f64; 2],
}

/// Running parameter on `side` whose image is closest to `x`.
///
/// Starts from the best of a set of samples and polishes with Gauss-Newton.
/// Returns the parameter and the remaining distance.
pub fn project_onto_side(patch: &NurbsPatch, side: Side, x: [f64; 2]) -> Result<(f64, f64), ModelError> {
    let dir = side.running_dir();
    let (lo, hi) = patch.param_range(dir);
    let spans = side_spans(patch, side);
    let mut best = (lo, f64::INFINITY);
    for (a, b) in &spans {
        for k in 0..=8 {
            let s = a + (b - a) * k as f64 / 8.0;
            let p = side.param(patch, s);
            let y = patch.point(p[0], p[1])?;
            let d = (y[0] - x[0]).hypot(y[1] - x[1]);
            if d < best.1 {
                best = (s, d);
            }
        }
    }
    let mut s = best.0;
    for _ in 0..60 {
        let (y, t, _) = side_tangent(patch, side, s)?;
        let r = [y[0] - x[0], y[1] - x[1]];
        let tt = t[0] * t[0] + t[1] * t[1];
        if tt == 0.0 {
            break;
        }
        let ds = -(r[0] * t[0] + r[1] * t[1]) / tt;
        let next = (s + ds).clamp(lo, hi);
        let step = (next - s).abs();
        s = next;
        if step <= 1e-15 * (hi - lo) {
            break;
        }
    }
    let p = side.param(patch, s);
    let y = patch.point(p[0], p[1])?;
    Ok((s, (y[0] - x[0]).hypot(y[1] - x[1])))
}

fn dedup_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        if out.last().map_or(true, |&l| x - l > tol) {
            out.push(x);
        }
    }
    out
}

/// Breakpoints of the interface in the first side's running parameter.
pub fn interface_breakpoints(model: &MultiPatchModel, spec: &InterfaceSpec) -> Result<Vec<f64>, ModelError> {
    let (p1, s1) = spec.first;
    let (p2, s2) = spec.second;
    let patch1 = model.patch(p1)?;
    let patch2 = model.patch(p2)?;
    let (lo, hi) = patch1.param_range(s1.running_dir());
    let scale = model.length_scale();
    let mut pts = patch1.knots(s1.running_dir()).breakpoints();
    for t in patch2.knots(s2.running_dir()).breakpoints() {
        let p = s2.param(patch2, t);
        let x = patch2.point(p[0], p[1])?;
        let (s, d) = project_onto_side(patch1, s1, x)?;
        if d > 1e-9 * scale {
            return Err(ModelError::Interface { point: x, reason: format!("breakpoint off the first side by {d:e}") });
        }
        pts.push(s);
    }
    let out = dedup_sorted(pts, 1e-12 * (hi - lo));
    Ok(out)
}

/// Merged Gauss rule on an interface: `n` points per segment between the union
/// of both sides' element boundaries, with each point inverse-mapped onto both sides.
pub fn interface_quadrature(
    model: &MultiPatchModel,
    spec: &InterfaceSpec,
    n: usize,
) -> Result<Vec<InterfacePoint>, ModelError> {
    let (p1, s1) = spec.first;
    let (p2, s2) = spec.second;
    let patch1 = model.patch(p1)?;
    let patch2 = model.patch(p2)?;
    let rule = gauss_rule(n)?;
    let scale = model.length_scale();
    let breaks = interface_breakpoints(model, spec)?;
    let mut out = Vec::with_capacity(n * breaks.len());
    for w in breaks.windows(2) {
        for (s, wq) in rule.mapped(w[0], w[1]) {
            let (x, t1, det1) = side_tangent(patch1, s1, s)?;
            let (t, d) = project_onto_side(patch2, s2, x)?;
            if d > 1e-10 * scale {
                return Err(ModelError::Interface {
                    point: x,
                    reason: format!("inverse mapping residual {d:e}"),
                });
            }
            let (_, t2, det2) = side_tangent(patch2, s2, t)?;
            out.push(InterfacePoint {
                param1: s1.param(patch1, s),
                param2: s2.param(patch2, t),
                point: x,
                weight: wq * t1[0].hypot(t1[1]),
                normal1: s1.outward_normal(t1, det1),
                normal2: s2.outward_normal(t2, det2),
            });
        }
    }
    Ok(out)
}
