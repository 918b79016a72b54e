use std::sync::Arc;

use nitsche_iga::assembly::{assemble_elasticity, AssembledSystem, FieldSolution};
use nitsche_iga::model::{vector_field, BoundarySelection, MultiPatchModel, Side};
use nitsche_iga::nitsche::{GammaPolicy, NitscheConfig, NitscheTerms};

use crate::error::{ExperimentError, Result};
use crate::fields::PolynomialField;

pub const SIDES: [Side; 4] = [Side::South, Side::East, Side::North, Side::West];

/// A named Nitsche configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub name: &'static str,
    pub config: NitscheConfig,
}

impl Variant {
    pub fn standard() -> Self {
        Self { name: "standard", config: NitscheConfig::symmetric() }
    }

    pub fn skew() -> Self {
        Self { name: "skew", config: NitscheConfig::skew_free() }
    }

    pub fn custom(config: NitscheConfig) -> Self {
        let name = if config.theta == 1.0 {
            "standard"
        } else if config.theta == -1.0 {
            "skew"
        } else {
            "custom"
        };
        Self { name, config }
    }
}

/// Builds a config from optional overrides of `theta` and `gamma`.
pub fn config_from(theta: Option<f64>, gamma: Option<GammaPolicy>, default: NitscheConfig) -> Result<NitscheConfig> {
    let theta = theta.unwrap_or(default.theta);
    let gamma = gamma.unwrap_or(if theta == -1.0 { default.gamma } else { GammaPolicy::EigenScaled(2.0) });
    let gamma = if theta != -1.0 && gamma == GammaPolicy::ParameterFree { GammaPolicy::EigenScaled(2.0) } else { gamma };
    NitscheConfig::new(theta, gamma).map_err(|e| ExperimentError::Config(e.to_string()))
}

/// Weak Dirichlet data from a polynomial field on the listed sides.
pub fn dirichlet_terms(
    model: &MultiPatchModel,
    sides: &[(usize, Side)],
    field: &PolynomialField,
) -> Result<NitscheTerms> {
    let f = Arc::new(field.clone());
    let data = vector_field(move |x| f.value(x));
    let mut t = NitscheTerms::new();
    for &(p, s) in sides {
        t.dirichlet(model, &BoundarySelection::side(p, s), &data)?;
    }
    Ok(t)
}

/// Elasticity system with weak Dirichlet data on `sides`, no body force.
pub fn dirichlet_system(
    model: &MultiPatchModel,
    sides: &[(usize, Side)],
    field: &PolynomialField,
    config: &NitscheConfig,
) -> Result<(AssembledSystem, f64)> {
    let mut sys = assemble_elasticity(model)?;
    let terms = dirichlet_terms(model, sides, field)?;
    let gamma = terms.apply(&mut sys, config)?;
    Ok((sys, gamma))
}

pub fn solve(system: &AssembledSystem) -> Result<FieldSolution> {
    Ok(system.solve()?)
}

/// Meshes `2^start .. 2^end` elements per side.
pub fn dyadic(start: usize, end: usize) -> Vec<usize> {
    (start..=end).map(|r| 1usize << r).collect()
}
