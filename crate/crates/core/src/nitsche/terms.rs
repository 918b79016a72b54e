use crate::model::{
    boundary_quadrature, interface_quadrature, BoundarySelection, DofMap, InterfaceSpec, Material, MaterialMode,
    MultiPatchModel, ScalarField, VectorField,
};
use crate::splines::SurfacePoint;

use super::{NitscheError, TraceEntry, TracePoint};

/// Traction `σ(u) n` for a displacement gradient.
pub fn boundary_flux(material: &Material, grad: [[f64; 2]; 2], n: [f64; 2]) -> [f64; 2] {
    let s = material.stress(grad);
    [s[0] * n[0] + s[2] * n[1], s[2] * n[0] + s[1] * n[1]]
}

/// Entries with trace `sign · N e_c` and flux `flux_scale · σ(N e_c) n` for every
/// basis function and component at a surface point.
pub fn elastic_entries(
    dofs: &DofMap,
    patch: usize,
    geo: &SurfacePoint,
    normal: [f64; 2],
    material: &Material,
    sign: f64,
    flux_scale: f64,
) -> Vec<TraceEntry> {
    let mut out = Vec::with_capacity(2 * geo.indices.len());
    for (k, &a) in geo.indices.iter().enumerate() {
        let g = geo.gradients[k];
        for c in 0..2 {
            let mut grad = [[0.0; 2]; 2];
            grad[c] = g;
            let t = boundary_flux(material, grad, normal);
            let mut trace = [0.0; 2];
            trace[c] = sign * geo.values[k];
            out.push(TraceEntry {
                dof: dofs.dof(patch, a, c),
                trace,
                flux: [flux_scale * t[0], flux_scale * t[1]],
            });
        }
    }
    out
}

/// Entries with trace `-dN/dn` and flux `M_nn(N)`.
pub fn plate_rotation_entries(
    dofs: &DofMap,
    patch: usize,
    geo: &SurfacePoint,
    normal: [f64; 2],
    material: &Material,
) -> Vec<TraceEntry> {
    let [nx, ny] = normal;
    geo.indices
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let g = geo.gradients[k];
            let m = material.moments(geo.hessians[k]);
            let mnn = m[0] * nx * nx + 2.0 * m[2] * nx * ny + m[1] * ny * ny;
            TraceEntry { dof: dofs.dof(patch, a, 0), trace: [-(g[0] * nx + g[1] * ny), 0.0], flux: [mnn, 0.0] }
        })
        .collect()
}

fn require_elastic(material: &Material) -> Result<(), NitscheError> {
    match material.mode {
        MaterialMode::PlaneStress | MaterialMode::PlaneStrain => Ok(()),
        _ => Err(NitscheError::Unsupported("displacement terms need a plane elasticity material".into())),
    }
}

fn nonempty(points: Vec<TracePoint>) -> Result<Vec<TracePoint>, NitscheError> {
    if points.is_empty() {
        Err(NitscheError::EmptySelection)
    } else {
        Ok(points)
    }
}

pub(super) fn dirichlet_points(
    model: &MultiPatchModel,
    selection: &BoundarySelection,
    ubar: &VectorField,
) -> Result<Vec<TracePoint>, NitscheError> {
    let material = model.material(selection.patch)?;
    require_elastic(material)?;
    let patch = model.patch(selection.patch)?;
    let dofs = model.global_dof_map(2);
    let mut out = Vec::new();
    for bp in boundary_quadrature(model, selection, None)? {
        let geo = patch.eval(bp.param[0], bp.param[1])?;
        out.push(TracePoint {
            point: bp.point,
            weight: bp.weight,
            prescribed: ubar(bp.point),
            entries: elastic_entries(&dofs, selection.patch, &geo, bp.normal, material, 1.0, 1.0),
        });
    }
    nonempty(out)
}

/// Trace `u·d`, flux `d·σ(u)n`, with `d` the outward normal unless given.
pub(super) fn normal_points(
    model: &MultiPatchModel,
    selection: &BoundarySelection,
    gbar: &ScalarField,
    direction: Option<[f64; 2]>,
) -> Result<Vec<TracePoint>, NitscheError> {
    let material = model.material(selection.patch)?;
    require_elastic(material)?;
    let patch = model.patch(selection.patch)?;
    let dofs = model.global_dof_map(2);
    let mut out = Vec::new();
    for bp in boundary_quadrature(model, selection, None)? {
        let geo = patch.eval(bp.param[0], bp.param[1])?;
        let d = direction.unwrap_or(bp.normal);
        let entries = elastic_entries(&dofs, selection.patch, &geo, bp.normal, material, 1.0, 1.0)
            .into_iter()
            .map(|e| TraceEntry {
                dof: e.dof,
                trace: [e.trace[0] * d[0] + e.trace[1] * d[1], 0.0],
                flux: [e.flux[0] * d[0] + e.flux[1] * d[1], 0.0],
            })
            .collect();
        out.push(TracePoint { point: bp.point, weight: bp.weight, prescribed: [gbar(bp.point), 0.0], entries });
    }
    nonempty(out)
}

pub(super) fn rotation_points(
    model: &MultiPatchModel,
    selection: &BoundarySelection,
    theta_bar: &ScalarField,
) -> Result<Vec<TracePoint>, NitscheError> {
    let material = model.material(selection.patch)?;
    if !matches!(material.mode, MaterialMode::KirchhoffPlate { .. }) {
        return Err(NitscheError::Unsupported("rotation terms need a plate material".into()));
    }
    let patch = model.patch(selection.patch)?;
    if patch.degree(0) < 2 || patch.degree(1) < 2 {
        return Err(NitscheError::Unsupported("rotation terms need a C1 basis (degree >= 2)".into()));
    }
    let dofs = model.global_dof_map(1);
    let mut out = Vec::new();
    for bp in boundary_quadrature(model, selection, None)? {
        let geo = patch.eval(bp.param[0], bp.param[1])?;
        out.push(TracePoint {
            point: bp.point,
            weight: bp.weight,
            prescribed: [theta_bar(bp.point), 0.0],
            entries: plate_rotation_entries(&dofs, selection.patch, &geo, bp.normal, material),
        });
    }
    nonempty(out)
}

/// Jump `u¹ - u²` against the average flux `½(σ¹n¹ - σ²n²)`.
pub(super) fn interface_points(model: &MultiPatchModel, spec: &InterfaceSpec) -> Result<Vec<TracePoint>, NitscheError> {
    let (p1, _) = spec.first;
    let (p2, _) = spec.second;
    let (m1, m2) = (model.material(p1)?, model.material(p2)?);
    require_elastic(m1)?;
    require_elastic(m2)?;
    let (patch1, patch2) = (model.patch(p1)?, model.patch(p2)?);
    let n = patch1.max_degree().max(patch2.max_degree()) + 1;
    let dofs = model.global_dof_map(2);
    let mut out = Vec::new();
    for q in interface_quadrature(model, spec, n)? {
        let g1 = patch1.eval(q.param1[0], q.param1[1])?;
        let g2 = patch2.eval(q.param2[0], q.param2[1])?;
        let mut entries = elastic_entries(&dofs, p1, &g1, q.normal1, m1, 1.0, 0.5);
        entries.extend(elastic_entries(&dofs, p2, &g2, q.normal2, m2, -1.0, -0.5));
        out.push(TracePoint { point: q.point, weight: q.weight, prescribed: [0.0; 2], entries });
    }
    nonempty(out)
}

fn rod_end_entries(
    model: &MultiPatchModel,
    patch: usize,
    at_max: bool,
    sign: f64,
    flux_scale: f64,
) -> Result<(f64, Vec<TraceEntry>), NitscheError> {
    let p = model.patch(patch)?;
    if p.dim() != 1 {
        return Err(NitscheError::Unsupported("rod terms need curve patches".into()));
    }
    let e = model.material(patch)?.e;
    let (lo, hi) = p.param_range(0);
    let geo = p.eval_curve(if at_max { hi } else { lo })?;
    let normal = if at_max { 1.0 } else { -1.0 };
    let dofs = model.global_dof_map(1);
    let entries = geo
        .indices
        .iter()
        .enumerate()
        .map(|(k, &a)| TraceEntry {
            dof: dofs.dof(patch, a, 0),
            trace: [sign * geo.values[k], 0.0],
            flux: [flux_scale * e * geo.first[k] * normal, 0.0],
        })
        .collect();
    Ok((geo.x, entries))
}

/// Jump `u¹ - u²` and average flux `½(E u¹' n¹ - E u²' n²)` with `n¹ = +1`, `n² = -1`.
pub(super) fn rod_coupling_point(model: &MultiPatchModel, left: usize, right: usize) -> Result<TracePoint, NitscheError> {
    let (x1, mut entries) = rod_end_entries(model, left, true, 1.0, 0.5)?;
    let (x2, second) = rod_end_entries(model, right, false, -1.0, -0.5)?;
    if (x1 - x2).abs() > 1e-10 * model.length_scale() {
        return Err(NitscheError::Model(crate::model::ModelError::Interface {
            point: [x1, 0.0],
            reason: format!("rod ends at {x1} and {x2} do not meet"),
        }));
    }
    entries.extend(second);
    Ok(TracePoint { point: [x1, 0.0], weight: 1.0, prescribed: [0.0; 2], entries })
}

pub(super) fn rod_end_point(
    model: &MultiPatchModel,
    patch: usize,
    at_max: bool,
    value: f64,
) -> Result<TracePoint, NitscheError> {
    let (x, entries) = rod_end_entries(model, patch, at_max, 1.0, 1.0)?;
    Ok(TracePoint { point: [x, 0.0], weight: 1.0, prescribed: [value, 0.0], entries })
}
