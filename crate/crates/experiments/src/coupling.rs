use std::time::Instant;

use nitsche_iga::assembly::{assemble_elasticity, error_norms, AssembledSystem};
use nitsche_iga::linalg::condition_number;
use nitsche_iga::model::{InterfaceSpec, Material, MultiPatchModel, Side};
use nitsche_iga::nitsche::{NitscheConfig, NitscheTerms};
use nitsche_iga::splines::{make_geometry, GeometryKind};

use crate::common::{dirichlet_terms, Variant, SIDES};
use crate::error::{ExperimentError, Result};
use crate::fields::{manufactured_field, PolynomialField};
use crate::patch::{MODULUS, POISSON, SQUARE_LENGTH};
use crate::report::{Cell, CsvTable, ExperimentReport};

/// Interface treatment of the square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    /// One patch, no interface.
    Conforming,
    /// Two patches split at `x = L/2`, coupled weakly with the variant's configuration.
    TwoPatch(Variant),
}

impl Layout {
    pub fn name(&self) -> &'static str {
        match self {
            Layout::Conforming => "conforming",
            Layout::TwoPatch(v) => v.name,
        }
    }

    fn config(&self) -> NitscheConfig {
        match self {
            Layout::Conforming => NitscheConfig::skew_free(),
            Layout::TwoPatch(v) => v.config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Give the right patch one more element in each direction.
    pub nonmatching: bool,
    /// Largest mesh for which the dense condition number is computed.
    pub cond_limit: usize,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self { nonmatching: false, cond_limit: 16 }
    }
}

/// `elements` counts elements per side of the whole square.
pub fn square_model(p: usize, elements: usize, layout: Layout, nonmatching: bool) -> Result<MultiPatchModel> {
    let mat = Material::plane_stress(MODULUS, POISSON)?;
    let l = SQUARE_LENGTH;
    match layout {
        Layout::Conforming => {
            let g = make_geometry(GeometryKind::UnitSquare { length: l }, p)?.refined(elements)?;
            Ok(MultiPatchModel::single(g, mat))
        }
        Layout::TwoPatch(_) => {
            if elements < 2 || elements % 2 != 0 {
                return Err(ExperimentError::Config("the split square needs an even element count".into()));
            }
            let half = elements / 2;
            let left = make_geometry(GeometryKind::Rectangle { origin: [0.0, 0.0], size: [l / 2.0, l] }, p)?
                .h_refine(&[half, elements])?;
            let extra = usize::from(nonmatching);
            let right = make_geometry(GeometryKind::Rectangle { origin: [l / 2.0, 0.0], size: [l / 2.0, l] }, p)?
                .h_refine(&[half + extra, elements + extra])?;
            let mut m = MultiPatchModel::new();
            m.add_patch(left, mat);
            m.add_patch(right, mat);
            m.add_interface(InterfaceSpec::new(0, Side::East, 1, Side::West))?;
            Ok(m)
        }
    }
}

fn outer_sides(model: &MultiPatchModel) -> Vec<(usize, Side)> {
    if model.num_patches() == 1 {
        SIDES.iter().map(|&s| (0, s)).collect()
    } else {
        vec![(0, Side::South), (0, Side::West), (0, Side::North), (1, Side::South), (1, Side::East), (1, Side::North)]
    }
}

/// System with weak Dirichlet data from `field` and, for two patches, weak coupling.
pub fn coupled_system(model: &MultiPatchModel, layout: Layout, field: &PolynomialField) -> Result<AssembledSystem> {
    let config = layout.config();
    let mut sys = assemble_elasticity(model)?;
    let dirichlet = dirichlet_terms(model, &outer_sides(model), field)?;
    let mut interface = NitscheTerms::new();
    for spec in model.interfaces() {
        interface.interface(model, spec)?;
    }
    // stabilization values come from the bulk form, so compute both before adding either
    let gd = dirichlet.gamma0(&sys, config.gamma)?;
    let gi = if interface.is_empty() { 0.0 } else { interface.gamma0(&sys, config.gamma)? };
    dirichlet.apply_with_gamma(&mut sys, config.theta, gd);
    if !interface.is_empty() {
        interface.apply_with_gamma(&mut sys, config.theta, gi);
    }
    Ok(sys)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSolve {
    pub dofs: usize,
    pub relative_l2: f64,
    pub relative_energy: f64,
    pub cond: Option<f64>,
}

pub fn solve_coupling(
    p: usize,
    elements: usize,
    layout: Layout,
    order: u32,
    params: &CouplingParams,
) -> Result<CouplingSolve> {
    let model = square_model(p, elements, layout, params.nonmatching)?;
    let field = manufactured_field(order);
    let sys = coupled_system(&model, layout, &field)?;
    let sol = sys.solve()?;
    let err = error_norms(&model, &sol, &field.to_analytic())?;
    let cond = if elements <= params.cond_limit { Some(condition_number(&sys.matrix())?) } else { None };
    Ok(CouplingSolve { dofs: sys.dim(), relative_l2: err.relative_l2(), relative_energy: err.relative_energy(), cond })
}

pub fn default_layouts() -> [Layout; 3] {
    [Layout::Conforming, Layout::TwoPatch(Variant::standard()), Layout::TwoPatch(Variant::skew())]
}

/// Errors, rates and condition numbers of the conforming and coupled squares.
pub fn run_coupling_statics(
    p: usize,
    layouts: &[Layout],
    meshes: &[usize],
    params: &CouplingParams,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut rep = ExperimentReport::new("coupling");
    rep.set_config("degree", p);
    rep.set_config("nonmatching", params.nonmatching);
    rep.set_config("meshes", meshes.iter().map(|&m| m as u64).collect::<Vec<_>>());
    rep.set_config("layouts", layouts.iter().map(|l| l.name()).collect::<Vec<_>>());
    let mut table =
        CsvTable::new(format!("coupling_p{p}"), &["layout_index", "elements", "dofs", "relative_l2", "relative_energy", "cond"]);
    for (li, layout) in layouts.iter().enumerate() {
        let name = layout.name();
        for &n in meshes {
            let s = solve_coupling(p, n, *layout, 4, params)?;
            let mut cell = Cell::new(name, n, s.dofs);
            cell.errors.l2 = Some(s.relative_l2);
            cell.errors.energy = Some(s.relative_energy);
            cell.cond = s.cond;
            rep.cells.push(cell);
            table.push(vec![li as f64, n as f64, s.dofs as f64, s.relative_l2, s.relative_energy, s.cond.unwrap_or(f64::NAN)]);
        }
        let coupled = !matches!(layout, Layout::Conforming);
        if p >= 4 {
            // the quartic lies in the discrete space
            let worst = rep.cells_of(name).filter_map(|c| c.errors.energy).fold(0.0, f64::max);
            if coupled {
                rep.check(format!("quartic reproduced {name}"), worst < 1e-8, format!("max relative energy error {worst:.3e}"));
            }
        } else if meshes.len() >= 3 {
            let r = rep.fit_variant_rate(name, &format!("energy_{name}"), false)?;
            if coupled {
                rep.check(format!("energy rate {name}"), (r - p as f64).abs() <= 0.3, format!("{r:.3} vs {p} +- 0.3"));
            }
            rep.fit_variant_rate(name, &format!("l2_{name}"), true)?;
        }
        if let Layout::TwoPatch(_) = layout {
            let lin = solve_coupling(p, meshes[0], *layout, 1, params)?;
            rep.check(
                format!("linear field exact {name}"),
                lin.relative_energy < 1e-9 && lin.relative_l2 < 1e-9,
                format!("relative energy error {:.3e}", lin.relative_energy),
            );
        }
    }
    rep.tables.push(table);
    cond_checks(&mut rep, meshes);
    rep.set_runtime(start.elapsed());
    Ok(rep)
}

fn cond_of(rep: &ExperimentReport, variant: &str, n: usize) -> Option<f64> {
    rep.cells_of(variant).find(|c| c.mesh == n).and_then(|c| c.cond)
}

fn cond_checks(rep: &mut ExperimentReport, meshes: &[usize]) {
    let mut ordering = true;
    let mut any = false;
    let mut detail = Vec::new();
    for &n in meshes {
        let (Some(cs), Some(ck), Some(cc)) = (cond_of(rep, "standard", n), cond_of(rep, "skew", n), cond_of(rep, "conforming", n))
        else {
            continue;
        };
        any = true;
        ordering &= cs > ck && ck >= 0.9 * cc;
        detail.push(format!("{n}: {cs:.3e} > {ck:.3e} >= 0.9*{cc:.3e}"));
    }
    if any {
        rep.check("condition number ordering", ordering, detail.join("; "));
    }
    if let (Some(a), Some(b)) = (cond_of(rep, "skew", 4), cond_of(rep, "skew", 16)) {
        let g = b / a;
        let mut detail = format!("ratio {g:.3}");
        if let (Some(c4), Some(c16)) = (cond_of(rep, "conforming", 4), cond_of(rep, "conforming", 16)) {
            detail.push_str(&format!(", conforming ratio {:.3}", c16 / c4));
        }
        rep.check("skew condition growth 4 -> 16", g <= 2.0, detail);
    }
}
