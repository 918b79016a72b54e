use std::f64::consts::PI;
use std::time::Instant;

use nitsche_iga::assembly::{assemble_kirchhoff, assemble_load, error_norms, AnalyticField, LoadSpec};
use nitsche_iga::linalg::DofReduction;
use nitsche_iga::model::{scalar_field, BoundarySelection, Material, MultiPatchModel, Side};
use nitsche_iga::nitsche::{NitscheConfig, NitscheTerms};
use nitsche_iga::splines::{make_geometry, GeometryKind};

use crate::error::{ExperimentError, Result};
use crate::report::{Cell, CsvTable, ExperimentReport};

/// Plate constants; the quarter model covers `[0, 0.5]^2` of the unit plate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateParams {
    pub thickness: f64,
    pub modulus: f64,
    pub poisson: f64,
    /// Load amplitude: `q = -load sin(pi x) sin(pi y)`.
    pub load: f64,
}

impl Default for PlateParams {
    fn default() -> Self {
        Self { thickness: 0.01, modulus: 1e7, poisson: 0.3, load: 10.0 }
    }
}

impl PlateParams {
    pub fn material(&self) -> Result<Material> {
        Ok(Material::plate(self.modulus, self.poisson, self.thickness)?)
    }

    /// Amplitude of the deflection `w = A sin(pi x) sin(pi y)`.
    pub fn amplitude(&self) -> Result<f64> {
        let d = self.material()?.flexural_rigidity();
        Ok(-self.load / (4.0 * PI.powi(4) * d))
    }

    pub fn exact(&self) -> Result<AnalyticField> {
        let a = self.amplitude()?;
        Ok(AnalyticField::new(
            move |x| [a * (PI * x[0]).sin() * (PI * x[1]).sin(), 0.0],
            move |x| {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                [[a * PI * cx * sy, a * PI * sx * cy], [0.0, 0.0]]
            },
        )
        .with_hessian(move |x| {
            let (sx, cx) = (PI * x[0]).sin_cos();
            let (sy, cy) = (PI * x[1]).sin_cos();
            let k = a * PI * PI;
            [[-k * sx * sy, k * cx * cy, -k * sx * sy], [0.0; 3]]
        }))
    }
}

/// Result of one quarter-plate solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateSolve {
    pub dofs: usize,
    pub relative_energy: f64,
    pub relative_l2: f64,
    pub center_deflection: f64,
    /// Largest `|dw/dn|` sampled on the symmetry edges, relative to the largest exact slope.
    pub symmetry_slope: f64,
}

/// Quarter plate: zero deflection on `x = 0` and `y = 0` by eliminating the edge
/// control values, zero rotation on `x = 0.5` and `y = 0.5` weakly.
pub fn solve_quarter_plate(p: usize, elements: usize, params: &PlateParams, config: &NitscheConfig) -> Result<PlateSolve> {
    if p < 2 {
        return Err(ExperimentError::Config("plate bending needs degree >= 2".into()));
    }
    let geo = make_geometry(GeometryKind::Rectangle { origin: [0.0, 0.0], size: [0.5, 0.5] }, p)?.refined(elements)?;
    let model = MultiPatchModel::single(geo, params.material()?);
    let mut sys = assemble_kirchhoff(&model)?;
    let load = params.load;
    let q = scalar_field(move |x| -load * (PI * x[0]).sin() * (PI * x[1]).sin());
    let f = assemble_load(&model, &LoadSpec::plate(q), 1)?;
    sys.add_to_rhs(&f);
    let mut terms = NitscheTerms::new();
    let zero = scalar_field(|_| 0.0);
    for s in [Side::East, Side::North] {
        terms.rotation(&model, &BoundarySelection::side(0, s), &zero)?;
    }
    terms.apply(&mut sys, config)?;
    let patch = model.patch(0)?;
    let mut fixed: Vec<usize> = [Side::West, Side::South]
        .iter()
        .flat_map(|s| s.control_indices(patch))
        .map(|i| sys.dof_map.dof(0, i, 0))
        .collect();
    fixed.sort_unstable();
    fixed.dedup();
    let red = DofReduction::new(sys.dim(), &fixed, &[]);
    let sol = sys.solve_reduced(&red)?;
    let exact = params.exact()?;
    let err = error_norms(&model, &sol, &exact)?;
    let center = sol.eval(&model, 0, 1.0, 1.0)?.value[0];
    let amp = params.amplitude()?;
    let mut slope: f64 = 0.0;
    for k in 0..=20 {
        let s = k as f64 / 20.0;
        slope = slope.max(sol.eval(&model, 0, 1.0, s)?.gradient[0][0].abs());
        slope = slope.max(sol.eval(&model, 0, s, 1.0)?.gradient[0][1].abs());
    }
    Ok(PlateSolve {
        dofs: red.reduced_dim(),
        relative_energy: err.relative_energy(),
        relative_l2: err.relative_l2(),
        center_deflection: center,
        symmetry_slope: slope / (PI * amp.abs()),
    })
}

/// H2 semi-norm rate and center deflection over a mesh sequence.
pub fn run_kirchhoff_plate(p: usize, meshes: &[usize], params: &PlateParams, config: &NitscheConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("kirchhoff");
    rep.set_config("degree", p);
    rep.set_config("theta", config.theta);
    rep.set_config("gamma", config.gamma.to_string());
    rep.set_config("thickness", params.thickness);
    rep.set_config("E", params.modulus);
    rep.set_config("nu", params.poisson);
    let amp = params.amplitude()?;
    rep.set_config("exact_center_deflection", amp);
    let mut table = CsvTable::new(
        format!("kirchhoff_p{p}"),
        &["elements", "h", "dofs", "relative_l2", "relative_energy", "center_deflection"],
    );
    let mut last = None;
    for &n in meshes {
        let s = solve_quarter_plate(p, n, params, config)?;
        let mut cell = Cell::new("", n, s.dofs);
        cell.errors.l2 = Some(s.relative_l2);
        cell.errors.energy = Some(s.relative_energy);
        cell.extra.insert("center_deflection".into(), s.center_deflection);
        cell.extra.insert("symmetry_slope".into(), s.symmetry_slope);
        rep.cells.push(cell);
        table.push(vec![n as f64, 0.5 / n as f64, s.dofs as f64, s.relative_l2, s.relative_energy, s.center_deflection]);
        last = Some(s);
    }
    rep.tables.push(table);
    let rate = rep.fit_variant_rate("", "energy", false)?;
    let expected = (p - 1) as f64;
    rep.check("energy rate", (rate - expected).abs() <= 0.3, format!("{rate:.3} vs {expected} +- 0.3"));
    if let Some(s) = last {
        let rel = (s.center_deflection - amp).abs() / amp.abs();
        rep.check("center deflection", rel <= 1e-3, format!("relative deviation {rel:.3e}"));
    }
    rep.set_runtime(start.elapsed());
    Ok(rep)
}
