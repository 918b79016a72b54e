use std::sync::Arc;

use crate::model::{gauss_rule, patch_elements, Material, MaterialMode, MultiPatchModel};
use crate::splines::SurfacePoint;

use super::{AssemblyError, FieldSolution};

/// Field value and physical derivatives at one point.
///
/// Scalar fields use component 0. Hessians are stored as `(xx, xy, yy)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldEval {
    pub point: [f64; 2],
    pub value: [f64; 2],
    /// `gradient[i][j] = du_i/dx_j`.
    pub gradient: [[f64; 2]; 2],
    pub hessian: [[f64; 3]; 2],
}

type Fn2<T> = Arc<dyn Fn([f64; 2]) -> T + Send + Sync>;

/// Closed-form field with derivatives, used as an exact solution.
#[derive(Clone)]
pub struct AnalyticField {
    pub value: Fn2<[f64; 2]>,
    pub gradient: Fn2<[[f64; 2]; 2]>,
    pub hessian: Option<Fn2<[[f64; 3]; 2]>>,
}

impl AnalyticField {
    pub fn new(
        value: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        gradient: impl Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync + 'static,
    ) -> Self {
        Self { value: Arc::new(value), gradient: Arc::new(gradient), hessian: None }
    }

    pub fn with_hessian(mut self, hessian: impl Fn([f64; 2]) -> [[f64; 3]; 2] + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn eval(&self, x: [f64; 2]) -> FieldEval {
        FieldEval {
            point: x,
            value: (self.value)(x),
            gradient: (self.gradient)(x),
            hessian: self.hessian.as_ref().map_or([[0.0; 3]; 2], |h| h(x)),
        }
    }
}

/// A discrete solution on a finer model with the same parameterization
/// (h-refinements of the same patches).
#[derive(Clone, Copy)]
pub struct ReferenceValue<'a> {
    pub model: &'a MultiPatchModel,
    pub solution: &'a FieldSolution,
}

/// Absolute and relative L2 and energy errors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub energy: f64,
    pub reference_l2: f64,
    pub reference_energy: f64,
}

impl ErrorNorms {
    pub fn relative_l2(&self) -> f64 {
        self.l2 / self.reference_l2
    }

    pub fn relative_energy(&self) -> f64 {
        self.energy / self.reference_energy
    }
}

/// Stress `(s_xx, s_yy, s_xy)` for elasticity, or moments `(M_xx, M_yy, M_xy)` for plates.
pub fn compute_stress(
    model: &MultiPatchModel,
    solution: &FieldSolution,
    patch: usize,
    u: f64,
    v: f64,
) -> Result<[f64; 3], AssemblyError> {
    let mat = model.material(patch)?;
    let f = solution.eval(model, patch, u, v)?;
    Ok(match mat.mode {
        MaterialMode::KirchhoffPlate { .. } => mat.moments(f.hessian[0]),
        MaterialMode::Rod => [mat.e * f.gradient[0][0], 0.0, 0.0],
        _ => mat.stress(f.gradient),
    })
}

/// Energy density `a(e, e)` of a field difference at one point.
fn energy_density(mat: &Material, e: &FieldEval) -> f64 {
    match mat.mode {
        MaterialMode::KirchhoffPlate { .. } => {
            let h = e.hessian[0];
            let k = [h[0], h[2], 2.0 * h[1]];
            let c = mat.bending_matrix();
            quad_form(&c, &k)
        }
        MaterialMode::Rod => mat.e * e.gradient[0][0] * e.gradient[0][0],
        _ => {
            let g = e.gradient;
            let eps = [g[0][0], g[1][1], g[0][1] + g[1][0]];
            quad_form(&mat.elasticity_matrix(), &eps)
        }
    }
}

fn quad_form(c: &[[f64; 3]; 3], x: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += x[i] * c[i][j] * x[j];
        }
    }
    s
}

fn diff(a: &FieldEval, b: &FieldEval) -> FieldEval {
    let mut d = *a;
    for c in 0..2 {
        d.value[c] -= b.value[c];
        for j in 0..2 {
            d.gradient[c][j] -= b.gradient[c][j];
        }
        for s in 0..3 {
            d.hessian[c][s] -= b.hessian[c][s];
        }
    }
    d
}

fn curve_eval(solution: &FieldSolution, patch: usize, geo: &crate::splines::CurvePoint) -> FieldEval {
    let mut out = FieldEval { point: [geo.x, 0.0], ..FieldEval::default() };
    for (k, &a) in geo.indices.iter().enumerate() {
        let c = solution.coefficients[solution.dof_map.dof(patch, a, 0)];
        out.value[0] += geo.values[k] * c;
        out.gradient[0][0] += geo.first[k] * c;
        out.hessian[0][0] += geo.second[k] * c;
    }
    out
}

/// Integrates `(|ref|^2, a(ref, ref), |ref - approx|^2, a(ref - approx, ...))` over the
/// elements of `model`, with `reference` and `approx` evaluated at each point.
fn integrate<R, A>(model: &MultiPatchModel, extra: usize, mut reference: R, mut approx: A) -> Result<ErrorNorms, AssemblyError>
where
    R: FnMut(usize, f64, f64, &FieldEval) -> Result<FieldEval, AssemblyError>,
    A: FnMut(usize, f64, f64, &FieldEval) -> Result<FieldEval, AssemblyError>,
{
    let mut acc = [0.0; 4];
    for (pid, entry) in model.entries().iter().enumerate() {
        let patch = &entry.patch;
        let ru = gauss_rule(patch.degree(0) + extra)?;
        let rv = if patch.dim() == 2 { gauss_rule(patch.degree(1) + extra)? } else { ru.clone() };
        for el in patch_elements(patch, pid) {
            for (u, v, w) in el.gauss_points(&ru, &rv, patch.dim()) {
                let (geom, wd) = if patch.dim() == 2 {
                    let g = patch.eval(u, v)?;
                    let wd = w * g.det.abs();
                    (FieldEval { point: g.point, ..FieldEval::default() }, wd)
                } else {
                    let g = patch.eval_curve(u)?;
                    (FieldEval { point: [g.x, 0.0], ..FieldEval::default() }, w * g.dx.abs())
                };
                let r = reference(pid, u, v, &geom)?;
                let a = approx(pid, u, v, &geom)?;
                let e = diff(&r, &a);
                acc[0] += wd * (r.value[0] * r.value[0] + r.value[1] * r.value[1]);
                acc[1] += wd * energy_density(&entry.material, &r);
                acc[2] += wd * (e.value[0] * e.value[0] + e.value[1] * e.value[1]);
                acc[3] += wd * energy_density(&entry.material, &e);
            }
        }
    }
    Ok(ErrorNorms {
        reference_l2: acc[0].sqrt(),
        reference_energy: acc[1].max(0.0).sqrt(),
        l2: acc[2].sqrt(),
        energy: acc[3].max(0.0).sqrt(),
    })
}

fn eval_discrete(
    model: &MultiPatchModel,
    solution: &FieldSolution,
    pid: usize,
    u: f64,
    v: f64,
) -> Result<FieldEval, AssemblyError> {
    let patch = model.patch(pid)?;
    if patch.dim() == 2 {
        let geo: SurfacePoint = patch.eval(u, v)?;
        Ok(solution.eval_at(pid, &geo))
    } else {
        Ok(curve_eval(solution, pid, &patch.eval_curve(u)?))
    }
}

/// Errors of a discrete solution against a closed-form field, with `p + 2` Gauss points
/// per direction.
pub fn error_norms(
    model: &MultiPatchModel,
    solution: &FieldSolution,
    exact: &AnalyticField,
) -> Result<ErrorNorms, AssemblyError> {
    let out = integrate(
        model,
        2,
        |_, _, _, geom| Ok(exact.eval(geom.point)),
        |pid, u, v, _| eval_discrete(model, solution, pid, u, v),
    )?;
    if out.reference_l2 == 0.0 && out.reference_energy == 0.0 {
        return Err(AssemblyError::ZeroReference);
    }
    Ok(out)
}

/// Errors against a discrete reference, integrated over the reference mesh.
///
/// Both models must share patch parameterizations, so a parameter point of the
/// reference maps to the same physical point in the coarse model.
pub fn error_norms_against(
    model: &MultiPatchModel,
    solution: &FieldSolution,
    reference: ReferenceValue<'_>,
) -> Result<ErrorNorms, AssemblyError> {
    if reference.model.num_patches() != model.num_patches() {
        return Err(AssemblyError::Unsupported("reference model has a different patch layout".into()));
    }
    let scale = model.length_scale();
    let out = integrate(
        reference.model,
        2,
        |pid, u, v, _| eval_discrete(reference.model, reference.solution, pid, u, v),
        |pid, u, v, geom| {
            let e = eval_discrete(model, solution, pid, u, v)?;
            let d = (e.point[0] - geom.point[0]).hypot(e.point[1] - geom.point[1]);
            if d > 1e-8 * scale {
                return Err(AssemblyError::Unsupported("models do not share a parameterization".into()));
            }
            Ok(e)
        },
    )?;
    if out.reference_l2 == 0.0 && out.reference_energy == 0.0 {
        return Err(AssemblyError::ZeroReference);
    }
    Ok(out)
}

/// L2 projection of a closed-form field onto the spline space (`ncomp` components).
///
/// Reproduces fields that lie in the space up to solver round-off.
pub fn l2_projection(model: &MultiPatchModel, field: &AnalyticField, ncomp: usize) -> Result<FieldSolution, AssemblyError> {
    let dofs = model.global_dof_map(ncomp);
    let mut sys = super::AssembledSystem::new(dofs.clone());
    for (pid, entry) in model.entries().iter().enumerate() {
        let patch = &entry.patch;
        let ru = gauss_rule(patch.degree(0) + 2)?;
        let rv = if patch.dim() == 2 { gauss_rule(patch.degree(1) + 2)? } else { ru.clone() };
        for el in patch_elements(patch, pid) {
            for (u, v, w) in el.gauss_points(&ru, &rv, patch.dim()) {
                let (x, wd, idx, vals) = if patch.dim() == 2 {
                    let g = patch.eval(u, v)?;
                    (g.point, w * g.det.abs(), g.indices, g.values)
                } else {
                    let g = patch.eval_curve(u)?;
                    ([g.x, 0.0], w * g.dx.abs(), g.indices, g.values)
                };
                let f = (field.value)(x);
                for (a, &ia) in idx.iter().enumerate() {
                    for c in 0..ncomp.min(2) {
                        let row = dofs.dof(pid, ia, c);
                        sys.add_rhs(row, wd * vals[a] * f[c]);
                        for (b, &ib) in idx.iter().enumerate() {
                            sys.add(row, dofs.dof(pid, ib, c), wd * vals[a] * vals[b]);
                        }
                    }
                }
            }
        }
    }
    sys.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_elasticity, AssembledSystem};
    use crate::model::Material;
    use crate::splines::{make_geometry, GeometryKind};

    fn model(n: usize) -> MultiPatchModel {
        let s = make_geometry(GeometryKind::UnitSquare { length: 1.0 }, 2).unwrap().refined(n).unwrap();
        MultiPatchModel::single(s, Material::plane_stress(1000.0, 0.3).unwrap())
    }

    fn linear_solution(m: &MultiPatchModel) -> FieldSolution {
        let dofs = m.global_dof_map(2);
        let mut c = vec![0.0; dofs.total()];
        for (a, x) in m.patch(0).unwrap().control_points().iter().enumerate() {
            c[dofs.dof(0, a, 0)] = 0.03 * x[0];
            c[dofs.dof(0, a, 1)] = -0.1 * x[1];
        }
        FieldSolution::new(c, dofs)
    }

    fn linear_exact() -> AnalyticField {
        AnalyticField::new(|x| [0.03 * x[0], -0.1 * x[1]], |_| [[0.03, 0.0], [0.0, -0.1]])
    }

    #[test]
    fn stress_of_uniaxial_state() {
        let m = model(2);
        let s = compute_stress(&m, &linear_solution(&m), 0, 0.3, 0.7).unwrap();
        assert!(s[0].abs() < 1e-10 && (s[1] + 100.0).abs() < 1e-10 && s[2].abs() < 1e-12);
    }

    #[test]
    fn exact_field_has_zero_error_and_matching_energy() {
        let m = model(3);
        let sol = linear_solution(&m);
        let e = error_norms(&m, &sol, &linear_exact()).unwrap();
        assert!(e.l2 < 1e-13 && e.energy < 1e-10);
        // energy norm squared equals u^T K u
        let k = assemble_elasticity(&m).unwrap().matrix();
        let ku = k.mul_vec(&sol.coefficients);
        let uku: f64 = ku.iter().zip(&sol.coefficients).map(|(a, b)| a * b).sum();
        assert!((e.reference_energy.powi(2) - uku).abs() < 1e-10);
    }

    #[test]
    fn perturbation_error_matches_quadratic_form() {
        let m = model(3);
        let k = assemble_elasticity(&m).unwrap().matrix();
        let mut sol = linear_solution(&m);
        let delta: Vec<f64> = (0..sol.coefficients.len()).map(|i| 1e-3 * ((i * 7 % 11) as f64 - 5.0)).collect();
        for (c, d) in sol.coefficients.iter_mut().zip(&delta) {
            *c += d;
        }
        let e = error_norms(&m, &sol, &linear_exact()).unwrap();
        let kd = k.mul_vec(&delta);
        let dkd: f64 = kd.iter().zip(&delta).map(|(a, b)| a * b).sum();
        assert!((e.energy.powi(2) - dkd).abs() < 1e-10 * dkd);
    }

    #[test]
    fn discrete_reference_on_a_finer_mesh() {
        let coarse = model(2);
        let fine = model(4);
        let sc = linear_solution(&coarse);
        let sf = linear_solution(&fine);
        let e = error_norms_against(&coarse, &sc, ReferenceValue { model: &fine, solution: &sf }).unwrap();
        assert!(e.l2 < 1e-13 && e.energy < 1e-10);
        let zero = FieldSolution::zeros(coarse.global_dof_map(2));
        let e = error_norms_against(&coarse, &zero, ReferenceValue { model: &fine, solution: &sf }).unwrap();
        assert!((e.relative_energy() - 1.0).abs() < 1e-12);
        let empty = AssembledSystem::new(fine.global_dof_map(2));
        assert!(matches!(
            error_norms_against(&coarse, &sc, ReferenceValue { model: &fine, solution: &FieldSolution::zeros(empty.dof_map) }),
            Err(AssemblyError::ZeroReference)
        ));
    }
}
