use crate::linalg::{SparseMatrix, Symmetry};
use crate::model::{gauss_rule, patch_elements, MaterialMode, MultiPatchModel};

use super::{AssembledSystem, AssemblyError};

fn require_surface(model: &MultiPatchModel, what: &str) -> Result<(), AssemblyError> {
    if model.entries().iter().any(|e| e.patch.dim() != 2) {
        return Err(AssemblyError::Unsupported(format!("{what} needs surface patches")));
    }
    Ok(())
}

/// Plane elasticity stiffness `∫ σ(u) : ε(v)` for every patch.
pub fn assemble_elasticity(model: &MultiPatchModel) -> Result<AssembledSystem, AssemblyError> {
    require_surface(model, "elasticity")?;
    let dofs = model.global_dof_map(2);
    let mut sys = AssembledSystem::new(dofs.clone());
    for (pid, entry) in model.entries().iter().enumerate() {
        if !matches!(entry.material.mode, MaterialMode::PlaneStress | MaterialMode::PlaneStrain) {
            return Err(AssemblyError::Unsupported("elasticity needs a plane stress or plane strain material".into()));
        }
        let c = entry.material.elasticity_matrix();
        let patch = &entry.patch;
        let ru = gauss_rule(patch.degree(0) + 1)?;
        let rv = gauss_rule(patch.degree(1) + 1)?;
        for el in patch_elements(patch, pid) {
            let mut local: Vec<usize> = Vec::new();
            let mut ke: Vec<f64> = Vec::new();
            for (u, v, w) in el.gauss_points(&ru, &rv, 2) {
                let geo = patch.eval(u, v)?;
                let n = geo.indices.len();
                if local.is_empty() {
                    local = geo.indices.clone();
                    ke = vec![0.0; 4 * n * n];
                }
                let wd = w * geo.det.abs();
                for a in 0..n {
                    let [ax, ay] = geo.gradients[a];
                    // rows of B_a for components x and y, Voigt (xx, yy, xy)
                    let ba = [[ax, 0.0, ay], [0.0, ay, ax]];
                    let mut cba = [[0.0; 3]; 2];
                    for i in 0..2 {
                        for r in 0..3 {
                            cba[i][r] = c[r][0] * ba[i][0] + c[r][1] * ba[i][1] + c[r][2] * ba[i][2];
                        }
                    }
                    for b in 0..n {
                        let [bx, by] = geo.gradients[b];
                        let bb = [[bx, 0.0, by], [0.0, by, bx]];
                        for i in 0..2 {
                            for j in 0..2 {
                                let val = cba[i][0] * bb[j][0] + cba[i][1] * bb[j][1] + cba[i][2] * bb[j][2];
                                ke[(2 * a + i) * 2 * n + 2 * b + j] += wd * val;
                            }
                        }
                    }
                }
            }
            let n = local.len();
            for a in 0..n {
                for i in 0..2 {
                    let row = dofs.dof(pid, local[a], i);
                    for b in 0..n {
                        for j in 0..2 {
                            sys.add(row, dofs.dof(pid, local[b], j), ke[(2 * a + i) * 2 * n + 2 * b + j]);
                        }
                    }
                }
            }
        }
    }
    sys.mark_bulk();
    Ok(sys)
}

/// Kirchhoff plate bending `D ∫ [ν Δu Δv + (1 - ν) ∇²u : ∇²v]`.
pub fn assemble_kirchhoff(model: &MultiPatchModel) -> Result<AssembledSystem, AssemblyError> {
    require_surface(model, "plate bending")?;
    let dofs = model.global_dof_map(1);
    let mut sys = AssembledSystem::new(dofs.clone());
    for (pid, entry) in model.entries().iter().enumerate() {
        if !matches!(entry.material.mode, MaterialMode::KirchhoffPlate { .. }) {
            return Err(AssemblyError::Unsupported("plate bending needs a plate material".into()));
        }
        let patch = &entry.patch;
        if patch.degree(0) < 2 || patch.degree(1) < 2 {
            return Err(AssemblyError::Unsupported("plate bending needs degree >= 2 (C1 basis)".into()));
        }
        let c = entry.material.bending_matrix();
        let ru = gauss_rule(patch.degree(0) + 1)?;
        let rv = gauss_rule(patch.degree(1) + 1)?;
        for el in patch_elements(patch, pid) {
            let mut local: Vec<usize> = Vec::new();
            let mut ke: Vec<f64> = Vec::new();
            for (u, v, w) in el.gauss_points(&ru, &rv, 2) {
                let geo = patch.eval(u, v)?;
                let n = geo.indices.len();
                if local.is_empty() {
                    local = geo.indices.clone();
                    ke = vec![0.0; n * n];
                }
                let wd = w * geo.det.abs();
                let kappa: Vec<[f64; 3]> = geo.hessians.iter().map(|h| [h[0], h[2], 2.0 * h[1]]).collect();
                for a in 0..n {
                    let mut ck = [0.0; 3];
                    for r in 0..3 {
                        ck[r] = c[r][0] * kappa[a][0] + c[r][1] * kappa[a][1] + c[r][2] * kappa[a][2];
                    }
                    for b in 0..n {
                        ke[a * n + b] += wd * (ck[0] * kappa[b][0] + ck[1] * kappa[b][1] + ck[2] * kappa[b][2]);
                    }
                }
            }
            let n = local.len();
            for a in 0..n {
                for b in 0..n {
                    sys.add(dofs.dof(pid, local[a], 0), dofs.dof(pid, local[b], 0), ke[a * n + b]);
                }
            }
        }
    }
    sys.mark_bulk();
    Ok(sys)
}

fn rod_form(model: &MultiPatchModel, stiffness: bool) -> Result<AssembledSystem, AssemblyError> {
    let dofs = model.global_dof_map(1);
    let mut sys = AssembledSystem::new(dofs.clone());
    for (pid, entry) in model.entries().iter().enumerate() {
        let patch = &entry.patch;
        if patch.dim() != 1 {
            return Err(AssemblyError::Unsupported("rod forms need curve patches".into()));
        }
        let e = entry.material.e;
        let rule = gauss_rule(patch.degree(0) + 1)?;
        for el in patch_elements(patch, pid) {
            for (u, _, w) in el.gauss_points(&rule, &rule, 1) {
                let geo = patch.eval_curve(u)?;
                let wd = w * geo.dx.abs();
                let n = geo.indices.len();
                for a in 0..n {
                    for b in 0..n {
                        let val = if stiffness {
                            e * geo.first[a] * geo.first[b]
                        } else {
                            geo.values[a] * geo.values[b]
                        };
                        sys.add(dofs.dof(pid, geo.indices[a], 0), dofs.dof(pid, geo.indices[b], 0), wd * val);
                    }
                }
            }
        }
    }
    sys.mark_bulk();
    Ok(sys)
}

/// Rod stiffness `∫ E u' v'`.
pub fn assemble_stiffness_rod(model: &MultiPatchModel) -> Result<AssembledSystem, AssemblyError> {
    rod_form(model, true)
}

/// Rod mass `∫ u v` (unit density and section).
pub fn assemble_mass_rod(model: &MultiPatchModel) -> Result<SparseMatrix, AssemblyError> {
    Ok(rod_form(model, false)?.triplets().to_csr(Symmetry::Symmetric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Material;
    use crate::splines::{make_geometry, GeometryKind};

    fn square(p: usize, n: usize, mat: Material) -> MultiPatchModel {
        let s = make_geometry(GeometryKind::UnitSquare { length: 1.0 }, p).unwrap().refined(n).unwrap();
        MultiPatchModel::single(s, mat)
    }

    fn interpolate(model: &MultiPatchModel, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        // exact for fields linear in x,y on affine geometries (control point interpolation)
        let dofs = model.global_dof_map(2);
        let mut u = vec![0.0; dofs.total()];
        for (pid, e) in model.entries().iter().enumerate() {
            for (a, c) in e.patch.control_points().iter().enumerate() {
                let v = f(*c);
                u[dofs.dof(pid, a, 0)] = v[0];
                u[dofs.dof(pid, a, 1)] = v[1];
            }
        }
        u
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn rigid_modes_are_in_the_kernel() {
        let m = square(2, 3, Material::plane_stress(1000.0, 0.3).unwrap());
        let k = assemble_elasticity(&m).unwrap().matrix();
        for mode in [[1.0, 0.0], [0.0, 1.0]] {
            let t = interpolate(&m, |_| mode);
            let kt = k.mul_vec(&t);
            assert!(dot(&kt, &kt).sqrt() < 1e-9 * k.max_abs() * dot(&t, &t).sqrt());
        }
        let r = interpolate(&m, |x| [-x[1], x[0]]);
        let kr = k.mul_vec(&r);
        assert!(dot(&kr, &kr).sqrt() < 1e-9 * k.max_abs() * dot(&r, &r).sqrt());
        assert!(k.max_asymmetry() <= 1e-12 * k.max_abs());
    }

    #[test]
    fn uniaxial_stretch_energy() {
        let m = square(2, 2, Material::plane_stress(1000.0, 0.3).unwrap());
        let k = assemble_elasticity(&m).unwrap().matrix();
        let u = interpolate(&m, |x| [0.03 * x[0], -0.1 * x[1]]);
        let energy = 0.5 * dot(&u, &k.mul_vec(&u));
        assert!((energy - 5.0).abs() < 1e-10, "{energy}");
    }

    #[test]
    fn kirchhoff_kernel_and_energy() {
        let mat = Material::plate(1e7, 0.3, 0.01).unwrap();
        let m = square(3, 2, mat);
        let k = assemble_kirchhoff(&m).unwrap().matrix();
        let patch = m.patch(0).unwrap();
        let affine: Vec<f64> = patch.control_points().iter().map(|c| 1.0 + 2.0 * c[0] - 3.0 * c[1]).collect();
        let ka = k.mul_vec(&affine);
        assert!(dot(&ka, &ka).sqrt() < 1e-9 * k.max_abs() * dot(&affine, &affine).sqrt());
        assert!(k.max_asymmetry() <= 1e-12 * k.max_abs());
        // x^2 through Greville interpolation of the quadratic: coefficients g_i g_j style
        let kv = patch.knots(0);
        let t = kv.values();
        let p = kv.degree();
        let (nu, nv) = patch.shape();
        let mut w = vec![0.0; nu * nv];
        for j in 0..nv {
            for i in 0..nu {
                // blossom of x^2 = product-average of pairs of interior knots
                let knots = &t[i + 1..=i + p];
                let mut s = 0.0;
                let mut cnt = 0.0;
                for a in 0..p {
                    for b in a + 1..p {
                        s += knots[a] * knots[b];
                        cnt += 1.0;
                    }
                }
                w[patch.index(i, j)] = s / cnt;
            }
        }
        let d = mat.flexural_rigidity();
        let energy = 0.5 * dot(&w, &k.mul_vec(&w));
        assert!((energy - 2.0 * d).abs() < 1e-9 * d, "{energy} vs {}", 2.0 * d);
    }

    #[test]
    fn doubling_modulus_doubles_stiffness() {
        let m = square(2, 2, Material::plane_stress(1000.0, 0.3).unwrap());
        let k1 = assemble_elasticity(&m).unwrap().matrix();
        let k2 = assemble_elasticity(&m.with_scaled_modulus(2.0)).unwrap().matrix();
        for (i, j, v) in k1.iter() {
            assert_eq!(k2.get(i, j), 2.0 * v);
        }
    }

    fn rod(p: usize, n: usize) -> MultiPatchModel {
        let r = make_geometry(GeometryKind::Rod { length: 1.0 }, p).unwrap().refined(n).unwrap();
        MultiPatchModel::single(r, Material::rod(1.0).unwrap())
    }

    #[test]
    fn rod_constant_mode_and_mass() {
        let m = rod(3, 5);
        let k = assemble_stiffness_rod(&m).unwrap().matrix();
        let mm = assemble_mass_rod(&m).unwrap();
        let ones = vec![1.0; k.dim()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-10));
        assert!((dot(&ones, &mm.mul_vec(&ones)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rod_two_linear_elements_single_dof() {
        // hand assembly: h = 1/2, interior hat: k = 2/h = 4, m = 2h/3 = 1/3
        let m = rod(1, 2);
        let k = assemble_stiffness_rod(&m).unwrap().matrix();
        let mm = assemble_mass_rod(&m).unwrap();
        let lambda = k.get(1, 1) / mm.get(1, 1);
        assert!((k.get(1, 1) - 4.0).abs() < 1e-13);
        assert!((mm.get(1, 1) - 1.0 / 3.0).abs() < 1e-14);
        assert!((lambda - 12.0).abs() < 1e-12);
    }
}
