//! Frictionless Signorini contact with Nitsche terms, solved by semi-smooth Newton.

mod newton;

pub use newton::{semismooth_newton, ContactState, InitialActive, NewtonOptions};

use thiserror::Error;

use crate::assembly::{AssembledSystem, AssemblyError, FieldSolution};
use crate::linalg::{CooMatrix, LinalgError, SparseMatrix, Symmetry};
use crate::model::{boundary_quadrature, project_onto_side, BoundarySelection, ModelError, MultiPatchModel};
use crate::nitsche::{elastic_entries, NitscheError, NitscheTerms, TraceEntry, TracePoint};
use crate::splines::SplineError;

#[derive(Debug, Error)]
pub enum ContactError {
    #[error("contact needs a positive stabilization parameter, got {0}")]
    Gamma(f64),
    #[error("no point of the opposite surface within {tolerance:e} of ({:.6}, {:.6})", point[0], point[1])]
    Pairing { point: [f64; 2], tolerance: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Nitsche(#[from] NitscheError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// `min(x, 0)`.
pub fn project_rminus(x: f64) -> f64 {
    x.min(0.0)
}

/// Generalized derivative of [`project_rminus`]: 1 for `x < 0`, else 0.
pub fn rminus_derivative(x: f64) -> f64 {
    if x < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// The line `x·normal = offset`; `normal` points from the body towards the obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPlane {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl RigidPlane {
    pub fn new(normal: [f64; 2], offset: f64) -> Result<Self, ContactError> {
        let len = normal[0].hypot(normal[1]);
        if !(len > 0.0) || !offset.is_finite() {
            return Err(ContactError::Unsupported("rigid plane needs a nonzero normal".into()));
        }
        Ok(Self { normal: [normal[0] / len, normal[1] / len], offset: offset / len })
    }

    /// The plane `y = height` approached from above.
    pub fn horizontal_below(height: f64) -> Self {
        Self { normal: [0.0, -1.0], offset: -height }
    }
}

/// Gap `(x² - x¹)·n¹` from a body point to its projection on the plane, and `n¹`.
pub fn gap_rigid_plane(plane: &RigidPlane, x: [f64; 2]) -> (f64, [f64; 2]) {
    let n = plane.normal;
    (plane.offset - (x[0] * n[0] + x[1] * n[1]), n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    RigidPlane(RigidPlane),
    /// Another elastic surface, paired by closest-point projection.
    Elastic(BoundarySelection),
}

/// A potential contact surface and what it may touch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSurface {
    pub selection: BoundarySelection,
    pub obstacle: Obstacle,
}

/// Contact quadrature point. Entries carry the scalar trace `B(N)` (relative normal
/// displacement) and flux `tau(N)` (normal stress) in their first components.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPoint {
    pub point: [f64; 2],
    /// Quadrature weight, including the ½ of the unbiased formulation.
    pub weight: f64,
    pub gap: f64,
    pub normal: [f64; 2],
    pub entries: Vec<TraceEntry>,
}

impl ContactPoint {
    /// `(tau(u), B(u))` at the point.
    pub fn normal_quantities(&self, u: &[f64]) -> (f64, f64) {
        let mut tau = 0.0;
        let mut b = 0.0;
        for e in &self.entries {
            tau += e.flux[0] * u[e.dof];
            b += e.trace[0] * u[e.dof];
        }
        (tau, b)
    }

    /// Argument `tau(u) - gamma (B(u) - g)` of the projection.
    pub fn argument(&self, u: &[f64], gamma: f64) -> f64 {
        let (tau, b) = self.normal_quantities(u);
        tau - gamma * (b - self.gap)
    }
}

fn max_degree(model: &MultiPatchModel, patch: usize) -> Result<usize, ContactError> {
    Ok(model.patch(patch)?.max_degree())
}

/// Points of one surface: trace `(v¹ - v²)·n¹`, flux `n¹·σ(v¹)n`, scaled by `factor`.
///
/// `n` is the outward normal of the surface; `n¹` is the obstacle direction (plane
/// normal, or `n` itself for an elastic counterpart).
fn surface_points(
    model: &MultiPatchModel,
    surface: &ContactSurface,
    factor: f64,
    search_tolerance: f64,
) -> Result<Vec<ContactPoint>, ContactError> {
    let sel = surface.selection;
    let patch = model.patch(sel.patch)?;
    let material = model.material(sel.patch)?;
    let dofs = model.global_dof_map(2);
    let n = max_degree(model, sel.patch)? + 1;
    let mut out = Vec::new();
    for bp in boundary_quadrature(model, &sel, Some(n))? {
        let geo = patch.eval(bp.param[0], bp.param[1])?;
        let (gap, n1, counterpart) = match surface.obstacle {
            Obstacle::RigidPlane(plane) => {
                let (g, n1) = gap_rigid_plane(&plane, bp.point);
                (g, n1, None)
            }
            Obstacle::Elastic(other) => {
                let other_patch = model.patch(other.patch)?;
                let (s, dist) = project_onto_side(other_patch, other.side, bp.point)?;
                if dist > search_tolerance {
                    return Err(ContactError::Pairing { point: bp.point, tolerance: search_tolerance });
                }
                let p2 = other.side.param(other_patch, s);
                let x2 = other_patch.point(p2[0], p2[1])?;
                let n1 = bp.normal;
                let g = (x2[0] - bp.point[0]) * n1[0] + (x2[1] - bp.point[1]) * n1[1];
                (g, n1, Some((other.patch, other_patch.eval(p2[0], p2[1])?)))
            }
        };
        let project = |e: TraceEntry| TraceEntry {
            dof: e.dof,
            trace: [e.trace[0] * n1[0] + e.trace[1] * n1[1], 0.0],
            flux: [e.flux[0] * n1[0] + e.flux[1] * n1[1], 0.0],
        };
        let mut entries: Vec<TraceEntry> =
            elastic_entries(&dofs, sel.patch, &geo, bp.normal, material, 1.0, 1.0).into_iter().map(project).collect();
        if let Some((pid, geo2)) = counterpart {
            // only the displacement of the counterpart enters, through the jump
            for (k, &a) in geo2.indices.iter().enumerate() {
                for c in 0..2 {
                    entries.push(TraceEntry { dof: dofs.dof(pid, a, c), trace: [-geo2.values[k] * n1[c], 0.0], flux: [0.0; 2] });
                }
            }
        }
        out.push(ContactPoint { point: bp.point, weight: factor * bp.weight, gap, normal: n1, entries });
    }
    if out.is_empty() {
        return Err(ContactError::Nitsche(NitscheError::EmptySelection));
    }
    Ok(out)
}

/// Points of a biased (slave-side) contact surface.
pub fn biased_points(
    model: &MultiPatchModel,
    surface: &ContactSurface,
    search_tolerance: f64,
) -> Result<Vec<ContactPoint>, ContactError> {
    surface_points(model, surface, 1.0, search_tolerance)
}

/// Points of the unbiased formulation: both surfaces, each with weight ½ and zero gap
/// taken from the geometry pairing.
pub fn unbiased_points(
    model: &MultiPatchModel,
    first: BoundarySelection,
    second: BoundarySelection,
    search_tolerance: f64,
) -> Result<Vec<ContactPoint>, ContactError> {
    let mut pts = surface_points(
        model,
        &ContactSurface { selection: first, obstacle: Obstacle::Elastic(second) },
        0.5,
        search_tolerance,
    )?;
    pts.extend(surface_points(
        model,
        &ContactSurface { selection: second, obstacle: Obstacle::Elastic(first) },
        0.5,
        search_tolerance,
    )?);
    Ok(pts)
}

/// Trace terms of the contact points, for the stabilization eigenproblem.
pub fn contact_trace_terms(points: &[ContactPoint]) -> NitscheTerms {
    let mut t = NitscheTerms::new();
    for p in points {
        t.push(TracePoint { point: p.point, weight: p.weight, prescribed: [p.gap, 0.0], entries: p.entries.clone() });
    }
    t
}

/// `gamma0_ref = 2 lambda_max` of the contact trace eigenproblem.
pub fn reference_gamma0(system: &AssembledSystem, points: &[ContactPoint]) -> Result<f64, ContactError> {
    Ok(2.0 * contact_trace_terms(points).lambda_max(&system.bulk_matrix())?)
}

/// Contact part of the residual and its generalized Jacobian at `u`.
///
/// `active[k]` selects the branch of the projection at point `k`; with
/// `active = None` it is taken from the sign of the argument.
pub fn contact_contribution(
    points: &[ContactPoint],
    u: &[f64],
    theta: f64,
    gamma: f64,
    active: Option<&[bool]>,
) -> Result<(Vec<f64>, CooMatrix, Vec<bool>), ContactError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(ContactError::Gamma(gamma));
    }
    let n = u.len();
    let mut r = vec![0.0; n];
    let mut j = CooMatrix::new(n);
    let mut flags = Vec::with_capacity(points.len());
    for (k, p) in points.iter().enumerate() {
        let (tau, b) = p.normal_quantities(u);
        let arg = tau - gamma * (b - p.gap);
        let on = active.map_or(arg < 0.0, |a| a[k]);
        flags.push(on);
        let w = p.weight / gamma;
        let proj = if on { arg } else { 0.0 };
        for a in &p.entries {
            let pa = theta * a.flux[0] - gamma * a.trace[0];
            r[a.dof] += w * (-theta * tau * a.flux[0] + proj * pa);
            for c in &p.entries {
                let mut v = -theta * a.flux[0] * c.flux[0];
                if on {
                    v += pa * (c.flux[0] - gamma * c.trace[0]);
                }
                if v != 0.0 {
                    j.push(a.dof, c.dof, w * v);
                }
            }
        }
    }
    Ok((r, j, flags))
}

/// Residual `K u - F + contact(u)` and tangent for the biased formulation at a field.
pub fn contact_residual_biased(
    system: &AssembledSystem,
    model: &MultiPatchModel,
    solution: &FieldSolution,
    surface: &ContactSurface,
    theta: f64,
    gamma: f64,
) -> Result<(Vec<f64>, SparseMatrix), ContactError> {
    let pts = biased_points(model, surface, model.length_scale())?;
    full_residual(system, &pts, &solution.coefficients, theta, gamma)
}

/// Residual and tangent for the unbiased formulation at a field.
pub fn contact_residual_unbiased(
    system: &AssembledSystem,
    model: &MultiPatchModel,
    solution: &FieldSolution,
    first: BoundarySelection,
    second: BoundarySelection,
    theta: f64,
    gamma: f64,
) -> Result<(Vec<f64>, SparseMatrix), ContactError> {
    let pts = unbiased_points(model, first, second, model.length_scale())?;
    full_residual(system, &pts, &solution.coefficients, theta, gamma)
}

pub(crate) fn full_residual(
    system: &AssembledSystem,
    points: &[ContactPoint],
    u: &[f64],
    theta: f64,
    gamma: f64,
) -> Result<(Vec<f64>, SparseMatrix), ContactError> {
    let (rc, jc, _) = contact_contribution(points, u, theta, gamma, None)?;
    let mut r = system.residual(u);
    for (a, b) in r.iter_mut().zip(rc) {
        *a += b;
    }
    let mut coo = system.triplets().clone();
    coo.extend_from(&jc);
    let sym = if theta == 1.0 { system.symmetry() } else { Symmetry::Nonsymmetric };
    Ok((r, coo.to_csr(sym)))
}

/// Contact pressure at a quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSample {
    pub point: [f64; 2],
    /// `-sigma_n` from the discrete stress.
    pub pressure: f64,
    /// `-[sigma_n - gamma (u_n - g)]_-`, the Nitsche contact force density.
    pub multiplier: f64,
    pub gap: f64,
    pub normal_displacement: f64,
}

/// Pressures at the contact points, in quadrature order along the surface.
pub fn contact_pressure_profile(points: &[ContactPoint], u: &[f64], gamma: f64) -> Vec<PressureSample> {
    points
        .iter()
        .map(|p| {
            let (tau, b) = p.normal_quantities(u);
            PressureSample {
                point: p.point,
                pressure: -tau,
                multiplier: -project_rminus(tau - gamma * (b - p.gap)),
                gap: p.gap,
                normal_displacement: b,
            }
        })
        .collect()
}

/// Resultant `∫ p ds` of the Nitsche contact force (unbiased weights included).
pub fn contact_resultant(points: &[ContactPoint], u: &[f64], gamma: f64) -> f64 {
    points.iter().zip(contact_pressure_profile(points, u, gamma)).map(|(p, s)| p.weight * s.multiplier).sum()
}

/// Worst violations of the Signorini conditions over the contact points.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktReport {
    /// `max sigma_n` (should be ≤ 0).
    pub max_tension: f64,
    /// `max (u_n - g)` (should be ≤ 0).
    pub max_penetration: f64,
    /// `max |sigma_n (u_n - g)|`.
    pub max_complementarity: f64,
}

pub fn kkt_check(points: &[ContactPoint], u: &[f64]) -> KktReport {
    let mut r = KktReport { max_tension: f64::NEG_INFINITY, max_penetration: f64::NEG_INFINITY, max_complementarity: 0.0 };
    for p in points {
        let (tau, b) = p.normal_quantities(u);
        r.max_tension = r.max_tension.max(tau);
        r.max_penetration = r.max_penetration.max(b - p.gap);
        r.max_complementarity = r.max_complementarity.max((tau * (b - p.gap)).abs());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_onto_negative_reals() {
        assert_eq!(project_rminus(-1.0), -1.0);
        assert_eq!(project_rminus(2.0), 0.0);
        assert_eq!(project_rminus(0.0), 0.0);
        assert_eq!(rminus_derivative(0.0), 0.0);
        assert_eq!(rminus_derivative(-1e-300), 1.0);
        assert_eq!(rminus_derivative(3.0), 0.0);
    }

    #[test]
    fn gap_to_horizontal_plane() {
        let plane = RigidPlane::horizontal_below(0.0);
        assert_eq!(gap_rigid_plane(&plane, [0.3, 0.01]), (0.01, [0.0, -1.0]));
        assert_eq!(gap_rigid_plane(&plane, [5.0, 0.0]).0, 0.0);
        let tilted = RigidPlane::new([0.0, -2.0], 0.0).unwrap();
        assert_eq!(tilted, plane);
    }

    #[test]
    fn gap_of_tangent_disk() {
        // disk of radius r centred at (0, r) touching y = 0
        let r = 1.0;
        let plane = RigidPlane::horizontal_below(0.0);
        for k in 0..10 {
            let x = -0.9 + 0.2 * k as f64;
            let y = r - (r * r - x * x).sqrt();
            let (g, _) = gap_rigid_plane(&plane, [x, y]);
            assert!((g - (r - (r * r - x * x).sqrt())).abs() < 1e-15);
        }
    }
}
