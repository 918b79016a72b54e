use std::time::Instant;

use nitsche_iga::assembly::{
    assemble_elasticity, assemble_load, compute_stress, l2_projection, AnalyticField, AssembledSystem, FieldSolution,
    LoadSpec,
};
use nitsche_iga::contact::{
    biased_points, reference_gamma0, semismooth_newton, unbiased_points, ContactPoint, ContactState, ContactSurface,
    InitialActive, NewtonOptions, Obstacle,
};
use nitsche_iga::model::{
    gauss_rule, patch_elements, scalar_field, vector_field, BoundaryKind, BoundarySelection, Material, MultiPatchModel,
    Side,
};
use nitsche_iga::nitsche::{GammaPolicy, NitscheConfig, NitscheTerms};
use nitsche_iga::splines::{make_geometry, GeometryKind};

use crate::error::{ExperimentError, Result};
use crate::report::{Cell, CsvTable, ExperimentReport};

/// Accepted pointwise relative error of `u_y`.
pub const DISPLACEMENT_TOLERANCE: f64 = 0.01;
/// Accepted pointwise relative error of `sigma_yy`.
pub const STRESS_TOLERANCE: f64 = 0.05;
/// Accepted relative difference between the two labelings of the unbiased surfaces.
pub const RELABEL_TOLERANCE: f64 = 1e-9;

/// Two unit blocks stacked along `y`, the upper one meshed more coarsely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams {
    pub degree: usize,
    pub lower_elements: usize,
    pub upper_elements: usize,
    pub modulus: f64,
    pub poisson: f64,
    /// Downward traction on the top side.
    pub pressure: f64,
    /// Multiple of `lambda_max` used as the contact stabilization.
    pub gamma_factor: f64,
}

impl Default for BlockParams {
    fn default() -> Self {
        Self { degree: 2, lower_elements: 4, upper_elements: 3, modulus: 1000.0, poisson: 0.3, pressure: 100.0, gamma_factor: 2.0 }
    }
}

impl BlockParams {
    /// Plane-stress solution under the sliding supports: `sigma_yy = -pressure`, no other stress.
    pub fn exact(&self) -> AnalyticField {
        let eyy = -self.pressure / self.modulus;
        let exx = -self.poisson * eyy;
        AnalyticField::new(move |x| [exx * x[0], eyy * x[1]], move |_| [[exx, 0.0], [0.0, eyy]])
    }
}

/// Contact formulation of the block interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Upper side as slave, lower as master.
    Biased,
    /// Both sides, weighted by one half each.
    Unbiased,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockVariant {
    pub pairing: Pairing,
    pub theta: f64,
}

impl BlockVariant {
    pub fn all() -> [BlockVariant; 4] {
        [
            BlockVariant { pairing: Pairing::Biased, theta: 1.0 },
            BlockVariant { pairing: Pairing::Biased, theta: -1.0 },
            BlockVariant { pairing: Pairing::Unbiased, theta: 1.0 },
            BlockVariant { pairing: Pairing::Unbiased, theta: -1.0 },
        ]
    }

    pub fn name(&self) -> String {
        let p = match self.pairing {
            Pairing::Biased => "biased",
            Pairing::Unbiased => "unbiased",
        };
        let t = if self.theta == 1.0 {
            "standard".to_string()
        } else if self.theta == -1.0 {
            "skew".to_string()
        } else {
            format!("theta{}", self.theta)
        };
        format!("{p}_{t}")
    }
}

pub fn block_model(params: &BlockParams) -> Result<MultiPatchModel> {
    let mat = Material::plane_stress(params.modulus, params.poisson)?;
    let rect = |y0: f64, n: usize| -> Result<_> {
        Ok(make_geometry(GeometryKind::Rectangle { origin: [0.0, y0], size: [1.0, 1.0] }, params.degree)?.h_refine(&[n, n])?)
    };
    let mut m = MultiPatchModel::new();
    m.add_patch(rect(0.0, params.lower_elements)?, mat);
    m.add_patch(rect(1.0, params.upper_elements)?, mat);
    let f = params.pressure;
    m.add_tag(BoundarySelection::side(1, Side::North), BoundaryKind::Neumann(vector_field(move |_| [0.0, -f])))?;
    Ok(m)
}

const LOWER_TOP: BoundarySelection = BoundarySelection { patch: 0, side: Side::North, range: None };
const UPPER_BOTTOM: BoundarySelection = BoundarySelection { patch: 1, side: Side::South, range: None };

/// Bulk stiffness, sliding supports on both West sides and the lower South side, top load.
pub fn block_system(model: &MultiPatchModel, theta: f64) -> Result<AssembledSystem> {
    let mut sys = assemble_elasticity(model)?;
    let mut t = NitscheTerms::new();
    let zero = scalar_field(|_| 0.0);
    for (p, s) in [(0, Side::West), (1, Side::West), (0, Side::South)] {
        t.normal_dirichlet(model, &BoundarySelection::side(p, s), &zero, None)?;
    }
    let policy = if theta == -1.0 { GammaPolicy::ParameterFree } else { GammaPolicy::EigenScaled(2.0) };
    let config = NitscheConfig::new(theta, policy).map_err(|e| ExperimentError::Config(e.to_string()))?;
    t.apply(&mut sys, &config)?;
    sys.add_to_rhs(&assemble_load(model, &LoadSpec::default(), 2)?);
    Ok(sys)
}

/// Contact points; `swap` exchanges the roles of the two surfaces.
pub fn block_points(model: &MultiPatchModel, pairing: Pairing, swap: bool) -> Result<Vec<ContactPoint>> {
    let (a, b) = if swap { (UPPER_BOTTOM, LOWER_TOP) } else { (LOWER_TOP, UPPER_BOTTOM) };
    Ok(match pairing {
        Pairing::Biased => {
            let (slave, master) = if swap { (LOWER_TOP, UPPER_BOTTOM) } else { (UPPER_BOTTOM, LOWER_TOP) };
            biased_points(model, &ContactSurface { selection: slave, obstacle: Obstacle::Elastic(master) }, 0.1)?
        }
        Pairing::Unbiased => unbiased_points(model, a, b, 0.1)?,
    })
}

pub struct BlockSolve {
    pub solution: FieldSolution,
    pub state: ContactState,
    pub gamma: f64,
}

pub fn solve_block(
    model: &MultiPatchModel,
    variant: BlockVariant,
    params: &BlockParams,
    swap: bool,
    initial: Option<&[f64]>,
) -> Result<BlockSolve> {
    let sys = block_system(model, variant.theta)?;
    let points = block_points(model, variant.pairing, swap)?;
    let gamma = 0.5 * params.gamma_factor * reference_gamma0(&sys, &points)?;
    let mut opts = NewtonOptions::new(variant.theta, gamma);
    if initial.is_none() {
        opts.initial_active = InitialActive::AllActive;
    }
    let (solution, state) = semismooth_newton(&sys, &points, &opts, None, initial)?;
    Ok(BlockSolve { solution, state, gamma })
}

/// Pointwise relative errors `(patch, x, y, e_uy, e_syy)` at the element Gauss points.
pub fn pointwise_errors(model: &MultiPatchModel, solution: &FieldSolution, params: &BlockParams) -> Result<Vec<[f64; 5]>> {
    let exact = params.exact();
    let rule = gauss_rule(params.degree + 1)?;
    let mut out = Vec::new();
    for pid in 0..model.num_patches() {
        let patch = model.patch(pid)?;
        for el in patch_elements(patch, pid) {
            for (u, v, _) in el.gauss_points(&rule, &rule, 2) {
                let x = patch.point(u, v)?;
                let uy = solution.eval(model, pid, u, v)?.value[1];
                let uy_exact = exact.eval(x).value[1];
                let syy = compute_stress(model, solution, pid, u, v)?[1];
                out.push([pid as f64, x[0], x[1], (uy - uy_exact) / uy_exact, (syy + params.pressure) / -params.pressure]);
            }
        }
    }
    Ok(out)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Error ranges for every variant, relabeling invariance and the exact-start test.
pub fn run_block_contact(variants: &[BlockVariant], params: &BlockParams) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("block");
    rep.set_config("degree", params.degree);
    rep.set_config("lower_elements", params.lower_elements);
    rep.set_config("upper_elements", params.upper_elements);
    rep.set_config("E", params.modulus);
    rep.set_config("nu", params.poisson);
    rep.set_config("pressure", params.pressure);
    rep.set_config("gamma_factor", params.gamma_factor);
    rep.set_config("variants", variants.iter().map(|v| v.name()).collect::<Vec<_>>());
    let model = block_model(params)?;
    let dofs = model.global_dof_map(2).total();
    let exact_start = l2_projection(&model, &params.exact(), 2)?;
    let mut table = CsvTable::new("block_errors", &["variant_index", "uy_min", "uy_max", "syy_min", "syy_max", "iterations"]);
    for (k, &v) in variants.iter().enumerate() {
        let name = v.name();
        let s = solve_block(&model, v, params, false, None)?;
        let mut cell = Cell::new(name.clone(), params.lower_elements, dofs);
        cell.newton_iters = Some(s.state.iterations);
        cell.converged = Some(s.state.converged);
        cell.extra.insert("gamma".into(), s.gamma);
        if !s.state.converged {
            rep.check(format!("converged {name}"), false, s.state.failure.clone().unwrap_or_default());
            rep.cells.push(cell);
            continue;
        }
        let errs = pointwise_errors(&model, &s.solution, params)?;
        let (uy_lo, uy_hi) = range(errs.iter().map(|e| e[3]));
        let (s_lo, s_hi) = range(errs.iter().map(|e| e[4]));
        for (key, val) in [("uy_min", uy_lo), ("uy_max", uy_hi), ("syy_min", s_lo), ("syy_max", s_hi)] {
            cell.extra.insert(key.into(), val);
        }
        let mut field = CsvTable::new(format!("block_field_{name}"), &["patch", "x", "y", "error_uy", "error_syy"]);
        for e in &errs {
            field.push(e.to_vec());
        }
        rep.tables.push(field);
        table.push(vec![k as f64, uy_lo, uy_hi, s_lo, s_hi, s.state.iterations as f64]);
        let uy = uy_lo.abs().max(uy_hi.abs());
        let sy = s_lo.abs().max(s_hi.abs());
        rep.check(
            format!("errors {name}"),
            uy <= DISPLACEMENT_TOLERANCE && sy <= STRESS_TOLERANCE,
            format!("u_y {:.3e}% .. {:.3e}%, sigma_yy {:.3e}% .. {:.3e}%", 100.0 * uy_lo, 100.0 * uy_hi, 100.0 * s_lo, 100.0 * s_hi),
        );
        if v.pairing == Pairing::Unbiased {
            let sw = solve_block(&model, v, params, true, None)?;
            let scale = s.solution.coefficients.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = s
                .solution
                .coefficients
                .iter()
                .zip(&sw.solution.coefficients)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / scale;
            cell.extra.insert("relabel_difference".into(), diff);
            rep.check(format!("relabeling invariance {name}"), sw.state.converged && diff <= RELABEL_TOLERANCE, format!("{diff:.3e}"));
        }
        let ex = solve_block(&model, v, params, false, Some(&exact_start.coefficients))?;
        cell.extra.insert("exact_start_iterations".into(), ex.state.iterations as f64);
        rep.check(
            format!("exact start {name}"),
            ex.state.converged && ex.state.iterations <= 2,
            format!("{} iterations", ex.state.iterations),
        );
        rep.cells.push(cell);
    }
    rep.tables.push(table);
    rep.set_runtime(start.elapsed());
    Ok(rep)
}
