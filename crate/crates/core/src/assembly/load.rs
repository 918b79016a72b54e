use crate::model::{
    boundary_quadrature, gauss_rule, patch_elements, BoundaryKind, BoundarySelection, MultiPatchModel, ScalarField,
    VectorField,
};

use super::AssemblyError;

/// Volume loads; Neumann tags of the model are always included.
#[derive(Clone, Default)]
pub struct LoadSpec {
    /// Body force for elasticity (force per area).
    pub body: Option<VectorField>,
    /// Transverse pressure for plates.
    pub plate: Option<ScalarField>,
    /// Distributed load for rods, as a function of `x`.
    pub rod: Option<ScalarField>,
}

impl LoadSpec {
    pub fn body(f: VectorField) -> Self {
        Self { body: Some(f), ..Self::default() }
    }

    pub fn plate(f: ScalarField) -> Self {
        Self { plate: Some(f), ..Self::default() }
    }
}

/// Right-hand side `∫ f·v + ∫_ΓN t·v`, numbered with `ncomp` components per control point.
pub fn assemble_load(model: &MultiPatchModel, loads: &LoadSpec, ncomp: usize) -> Result<Vec<f64>, AssemblyError> {
    let dofs = model.global_dof_map(ncomp);
    let mut f = vec![0.0; dofs.total()];
    for (pid, entry) in model.entries().iter().enumerate() {
        let patch = &entry.patch;
        if patch.dim() == 1 {
            let Some(q) = &loads.rod else { continue };
            let rule = gauss_rule(patch.degree(0) + 2)?;
            for el in patch_elements(patch, pid) {
                for (u, _, w) in el.gauss_points(&rule, &rule, 1) {
                    let geo = patch.eval_curve(u)?;
                    let val = q([geo.x, 0.0]) * w * geo.dx.abs();
                    for (k, &a) in geo.indices.iter().enumerate() {
                        f[dofs.dof(pid, a, 0)] += geo.values[k] * val;
                    }
                }
            }
            continue;
        }
        if loads.body.is_none() && loads.plate.is_none() {
            continue;
        }
        let ru = gauss_rule(patch.degree(0) + 2)?;
        let rv = gauss_rule(patch.degree(1) + 2)?;
        for el in patch_elements(patch, pid) {
            for (u, v, w) in el.gauss_points(&ru, &rv, 2) {
                let geo = patch.eval(u, v)?;
                let wd = w * geo.det.abs();
                let mut load = [0.0; 2];
                if ncomp == 1 {
                    if let Some(p) = &loads.plate {
                        load[0] = p(geo.point);
                    }
                } else if let Some(b) = &loads.body {
                    load = b(geo.point);
                }
                for (k, &a) in geo.indices.iter().enumerate() {
                    for c in 0..ncomp.min(2) {
                        f[dofs.dof(pid, a, c)] += geo.values[k] * load[c] * wd;
                    }
                }
            }
        }
    }
    for tag in model.tags() {
        if let BoundaryKind::Neumann(t) = &tag.kind {
            let part = assemble_traction(model, &tag.selection, t, ncomp)?;
            for (a, b) in f.iter_mut().zip(part) {
                *a += b;
            }
        }
    }
    Ok(f)
}

/// `∫_Γ t·v` over one boundary selection.
pub fn assemble_traction(
    model: &MultiPatchModel,
    selection: &BoundarySelection,
    traction: &VectorField,
    ncomp: usize,
) -> Result<Vec<f64>, AssemblyError> {
    let dofs = model.global_dof_map(ncomp);
    let mut f = vec![0.0; dofs.total()];
    let patch = model.patch(selection.patch)?;
    let n = patch.degree(selection.side.running_dir()) + 2;
    for bp in boundary_quadrature(model, selection, Some(n))? {
        let geo = patch.eval(bp.param[0], bp.param[1])?;
        let t = traction(bp.point);
        for (k, &a) in geo.indices.iter().enumerate() {
            for c in 0..ncomp.min(2) {
                f[dofs.dof(selection.patch, a, c)] += geo.values[k] * t[c] * bp.weight;
            }
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{scalar_field, vector_field, Material, Side};
    use crate::splines::{make_geometry, GeometryKind};
    use std::f64::consts::PI;

    #[test]
    fn body_force_total_equals_force_times_area() {
        let s = make_geometry(GeometryKind::UnitSquare { length: 2.0 }, 2).unwrap().refined(3).unwrap();
        let m = MultiPatchModel::single(s, Material::plane_stress(1.0, 0.3).unwrap());
        let f = assemble_load(&m, &LoadSpec::body(vector_field(|_| [1.5, -2.0])), 2).unwrap();
        let fx: f64 = f.iter().step_by(2).sum();
        let fy: f64 = f.iter().skip(1).step_by(2).sum();
        assert!((fx - 6.0).abs() < 1e-12 && (fy + 8.0).abs() < 1e-12);
    }

    #[test]
    fn traction_total_equals_traction_times_length() {
        let s = make_geometry(GeometryKind::UnitSquare { length: 3.0 }, 3).unwrap().refined(2).unwrap();
        let mut m = MultiPatchModel::single(s, Material::plane_stress(1.0, 0.3).unwrap());
        m.add_tag(BoundarySelection::side(0, Side::North), BoundaryKind::Neumann(vector_field(|_| [0.0, -100.0])))
            .unwrap();
        let f = assemble_load(&m, &LoadSpec::default(), 2).unwrap();
        let fy: f64 = f.iter().skip(1).step_by(2).sum();
        assert!((fy + 300.0).abs() < 1e-10);
    }

    #[test]
    fn sinusoidal_plate_load_on_quarter_plate() {
        let s = make_geometry(GeometryKind::UnitSquare { length: 0.5 }, 3).unwrap().refined(8).unwrap();
        let m = MultiPatchModel::single(s, Material::plate(1e7, 0.3, 0.01).unwrap());
        let load = scalar_field(|x| -10.0 * (PI * x[0]).sin() * (PI * x[1]).sin());
        let f = assemble_load(&m, &LoadSpec::plate(load), 1).unwrap();
        let total: f64 = f.iter().sum();
        assert!((total + 10.0 / (PI * PI)).abs() < 1e-8, "{total}");
    }
}
