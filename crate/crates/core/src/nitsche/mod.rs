//! Nitsche boundary and interface terms of the θ-family and the stabilization estimate.

mod terms;

pub use terms::{boundary_flux, elastic_entries, plate_rotation_entries};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::assembly::{AssembledSystem, AssemblyError};
use crate::linalg::{generalized_symmetric_eig, CooMatrix, LinalgError, SparseMatrix, Symmetry};
use crate::model::{BoundarySelection, InterfaceSpec, ModelError, MultiPatchModel, ScalarField, VectorField};
use crate::splines::SplineError;

#[derive(Debug, Error)]
pub enum NitscheError {
    #[error("invalid Nitsche configuration: {0}")]
    Config(String),
    #[error("no quadrature points on the selected boundary or interface")]
    EmptySelection,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// How the stabilization parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaPolicy {
    /// No stabilization; only valid with `theta = -1`.
    ParameterFree,
    /// `multiplier * lambda_max` of the trace eigenproblem.
    EigenScaled(f64),
    Fixed(f64),
}

impl Default for GammaPolicy {
    fn default() -> Self {
        GammaPolicy::EigenScaled(2.0)
    }
}

impl fmt::Display for GammaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaPolicy::ParameterFree => write!(f, "free"),
            GammaPolicy::EigenScaled(m) => write!(f, "eigen:{m}"),
            GammaPolicy::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for GammaPolicy {
    type Err = NitscheError;

    /// `free`, `eigen`, `eigen:<m>` or `fixed:<value>`.
    fn from_str(s: &str) -> Result<Self, NitscheError> {
        let bad = || NitscheError::Config(format!("cannot parse gamma policy `{s}`"));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| a.ok_or_else(bad)?.parse::<f64>().map_err(|_| bad());
        let policy = match head {
            "free" | "none" if arg.is_none() => GammaPolicy::ParameterFree,
            "eigen" => GammaPolicy::EigenScaled(if arg.is_some() { num(arg)? } else { 2.0 }),
            "fixed" => GammaPolicy::Fixed(num(arg)?),
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl GammaPolicy {
    fn validate(&self) -> Result<(), NitscheError> {
        match *self {
            GammaPolicy::EigenScaled(m) if !(m > 0.0 && m.is_finite()) => {
                Err(NitscheError::Config(format!("eigen multiplier must be positive, got {m}")))
            }
            GammaPolicy::Fixed(v) if !(v >= 0.0 && v.is_finite()) => {
                Err(NitscheError::Config(format!("fixed gamma must be non-negative, got {v}")))
            }
            _ => Ok(()),
        }
    }
}

/// Nitsche parameter `theta` with a stabilization policy.
///
/// `theta = 1` is the symmetric variant, `theta = -1` the skew-symmetric one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NitscheConfig {
    pub theta: f64,
    pub gamma: GammaPolicy,
}

impl NitscheConfig {
    pub fn new(theta: f64, gamma: GammaPolicy) -> Result<Self, NitscheError> {
        let c = Self { theta, gamma };
        c.validate()?;
        Ok(c)
    }

    /// `theta = -1` without stabilization.
    pub fn skew_free() -> Self {
        Self { theta: -1.0, gamma: GammaPolicy::ParameterFree }
    }

    /// `theta = 1` with `gamma0 = 2 lambda_max`.
    pub fn symmetric() -> Self {
        Self { theta: 1.0, gamma: GammaPolicy::EigenScaled(2.0) }
    }

    pub fn validate(&self) -> Result<(), NitscheError> {
        if !self.theta.is_finite() {
            return Err(NitscheError::Config("theta must be finite".into()));
        }
        self.gamma.validate()?;
        if self.gamma == GammaPolicy::ParameterFree && self.theta != -1.0 {
            return Err(NitscheError::Config(format!(
                "the parameter-free variant requires theta = -1, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.theta == 1.0
    }
}

/// One DoF's contribution at a quadrature point: the trace `B(N)` and the
/// conjugate flux `tau(N)`. Scalar quantities use the first component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub dof: usize,
    pub trace: [f64; 2],
    pub flux: [f64; 2],
}

/// Quadrature point of a Nitsche term with its prescribed trace value.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub point: [f64; 2],
    pub weight: f64,
    pub prescribed: [f64; 2],
    pub entries: Vec<TraceEntry>,
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// A set of trace points sharing one stabilization parameter.
#[derive(Debug, Clone, Default)]
pub struct NitscheTerms {
    points: Vec<TracePoint>,
}

impl NitscheTerms {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, point: TracePoint) {
        self.points.push(point);
    }

    pub fn extend(&mut self, other: NitscheTerms) {
        self.points.extend(other.points);
    }

    /// Weak displacement `u = ubar` on a boundary selection.
    pub fn dirichlet(
        &mut self,
        model: &MultiPatchModel,
        selection: &BoundarySelection,
        ubar: &VectorField,
    ) -> Result<&mut Self, NitscheError> {
        self.points.extend(terms::dirichlet_points(model, selection, ubar)?);
        Ok(self)
    }

    /// Weak normal displacement `u·d = gbar` with `d` the outward normal, or a fixed direction.
    pub fn normal_dirichlet(
        &mut self,
        model: &MultiPatchModel,
        selection: &BoundarySelection,
        gbar: &ScalarField,
        direction: Option<[f64; 2]>,
    ) -> Result<&mut Self, NitscheError> {
        self.points.extend(terms::normal_points(model, selection, gbar, direction)?);
        Ok(self)
    }

    /// Weak plate rotation `-dw/dn = theta_bar`.
    pub fn rotation(
        &mut self,
        model: &MultiPatchModel,
        selection: &BoundarySelection,
        theta_bar: &ScalarField,
    ) -> Result<&mut Self, NitscheError> {
        self.points.extend(terms::rotation_points(model, selection, theta_bar)?);
        Ok(self)
    }

    /// Displacement continuity across an elasticity interface.
    pub fn interface(&mut self, model: &MultiPatchModel, spec: &InterfaceSpec) -> Result<&mut Self, NitscheError> {
        self.points.extend(terms::interface_points(model, spec)?);
        Ok(self)
    }

    /// Continuity between the right end of rod patch `left` and the left end of `right`.
    pub fn rod_coupling(&mut self, model: &MultiPatchModel, left: usize, right: usize) -> Result<&mut Self, NitscheError> {
        self.points.push(terms::rod_coupling_point(model, left, right)?);
        Ok(self)
    }

    /// Weak end value `u = value` at one end of a rod patch.
    pub fn rod_end(
        &mut self,
        model: &MultiPatchModel,
        patch: usize,
        at_max: bool,
        value: f64,
    ) -> Result<&mut Self, NitscheError> {
        self.points.push(terms::rod_end_point(model, patch, at_max, value)?);
        Ok(self)
    }

    /// Distinct DoFs touched by the terms, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.points.iter().flat_map(|p| p.entries.iter().map(|e| e.dof)).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Largest `lambda` of `<tau(u), tau(v)> = lambda a(u, v)` over the DoFs the terms touch.
    ///
    /// `bulk` is the bulk form; a relative diagonal shift of 1e-10 keeps the
    /// restricted block definite.
    pub fn lambda_max(&self, bulk: &SparseMatrix) -> Result<f64, NitscheError> {
        if self.points.is_empty() {
            return Err(NitscheError::EmptySelection);
        }
        let support = self.support();
        let pos: BTreeMap<usize, usize> = support.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let n = support.len();
        let mut t = faer::Mat::<f64>::zeros(n, n);
        for p in &self.points {
            for a in &p.entries {
                let i = pos[&a.dof];
                for b in &p.entries {
                    t[(i, pos[&b.dof])] += p.weight * dot(a.flux, b.flux);
                }
            }
        }
        let a = bulk.dense_block(&support);
        let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
        let shift = 1e-10 * trace / n as f64;
        let eig = generalized_symmetric_eig(&t, &a, shift)?;
        Ok(eig.max())
    }

    /// Stabilization value for a policy.
    pub fn gamma0(&self, system: &AssembledSystem, policy: GammaPolicy) -> Result<f64, NitscheError> {
        policy.validate()?;
        Ok(match policy {
            GammaPolicy::ParameterFree => 0.0,
            GammaPolicy::Fixed(v) => v,
            GammaPolicy::EigenScaled(m) => m * self.lambda_max(&system.bulk_matrix())?,
        })
    }

    /// Adds the terms with the configured stabilization; returns the `gamma0` used.
    pub fn apply(&self, system: &mut AssembledSystem, config: &NitscheConfig) -> Result<f64, NitscheError> {
        config.validate()?;
        let gamma = self.gamma0(system, config.gamma)?;
        self.apply_with_gamma(system, config.theta, gamma);
        Ok(gamma)
    }

    /// `K_ij += w (-tau_j·B_i - theta B_j·tau_i + gamma B_j·B_i)` and
    /// `F_i += w (-theta tau_i·Bbar + gamma B_i·Bbar)`.
    pub fn apply_with_gamma(&self, system: &mut AssembledSystem, theta: f64, gamma: f64) {
        for p in &self.points {
            let w = p.weight;
            for a in &p.entries {
                for b in &p.entries {
                    let v = -dot(b.flux, a.trace) - theta * dot(b.trace, a.flux) + gamma * dot(b.trace, a.trace);
                    if v != 0.0 {
                        system.add(a.dof, b.dof, w * v);
                    }
                }
                let f = -theta * dot(a.flux, p.prescribed) + gamma * dot(a.trace, p.prescribed);
                system.add_rhs(a.dof, w * f);
            }
        }
        if theta != 1.0 {
            system.set_symmetry(Symmetry::Nonsymmetric);
        }
    }

    /// Consistency block `C_ij = -∫ tau_j·B_i` and penalty block `P_ij = ∫ B_j·B_i`;
    /// the terms add `C + theta Cᵀ + gamma P`.
    pub fn blocks(&self, dim: usize) -> (SparseMatrix, SparseMatrix) {
        let mut c = CooMatrix::new(dim);
        let mut pen = CooMatrix::new(dim);
        for p in &self.points {
            for a in &p.entries {
                for b in &p.entries {
                    c.push(a.dof, b.dof, -p.weight * dot(b.flux, a.trace));
                    pen.push(a.dof, b.dof, p.weight * dot(b.trace, a.trace));
                }
            }
        }
        (c.to_csr(Symmetry::Nonsymmetric), pen.to_csr(Symmetry::Symmetric))
    }
}

/// `gamma0 = multiplier * lambda_max` for a set of terms (multiplier 2 by default).
pub fn estimate_gamma0(system: &AssembledSystem, terms: &NitscheTerms, multiplier: f64) -> Result<f64, NitscheError> {
    terms.gamma0(system, GammaPolicy::EigenScaled(multiplier))
}

/// Weak Dirichlet condition on an elasticity system. Returns the `gamma0` used.
pub fn add_dirichlet_terms(
    system: &mut AssembledSystem,
    model: &MultiPatchModel,
    selection: &BoundarySelection,
    ubar: &VectorField,
    config: &NitscheConfig,
) -> Result<f64, NitscheError> {
    let mut t = NitscheTerms::new();
    t.dirichlet(model, selection, ubar)?;
    t.apply(system, config)
}

/// Weak plate rotation condition. Returns the `gamma0` used.
pub fn add_symmetry_rotation_terms(
    system: &mut AssembledSystem,
    model: &MultiPatchModel,
    selection: &BoundarySelection,
    theta_bar: &ScalarField,
    config: &NitscheConfig,
) -> Result<f64, NitscheError> {
    let mut t = NitscheTerms::new();
    t.rotation(model, selection, theta_bar)?;
    t.apply(system, config)
}

/// Weak coupling of two elasticity patches. Returns the `gamma0` used.
pub fn add_interface_coupling_terms(
    system: &mut AssembledSystem,
    model: &MultiPatchModel,
    spec: &InterfaceSpec,
    config: &NitscheConfig,
) -> Result<f64, NitscheError> {
    let mut t = NitscheTerms::new();
    t.interface(model, spec)?;
    t.apply(system, config)
}

/// Weak coupling of two rod patches at their common end. Returns the `gamma0` used.
pub fn add_rod_coupling_terms(
    system: &mut AssembledSystem,
    model: &MultiPatchModel,
    left: usize,
    right: usize,
    config: &NitscheConfig,
) -> Result<f64, NitscheError> {
    let mut t = NitscheTerms::new();
    t.rod_coupling(model, left, right)?;
    t.apply(system, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(NitscheConfig::new(1.0, GammaPolicy::ParameterFree).is_err());
        assert!(NitscheConfig::new(-1.0, GammaPolicy::ParameterFree).is_ok());
        assert!(NitscheConfig::new(1.0, GammaPolicy::EigenScaled(0.0)).is_err());
        assert!(NitscheConfig::new(0.0, GammaPolicy::Fixed(-1.0)).is_err());
        assert!(NitscheConfig::new(f64::NAN, GammaPolicy::Fixed(1.0)).is_err());
    }

    #[test]
    fn gamma_policy_parsing() {
        assert_eq!("free".parse::<GammaPolicy>().unwrap(), GammaPolicy::ParameterFree);
        assert_eq!("eigen".parse::<GammaPolicy>().unwrap(), GammaPolicy::EigenScaled(2.0));
        assert_eq!("eigen:3.5".parse::<GammaPolicy>().unwrap(), GammaPolicy::EigenScaled(3.5));
        assert_eq!("fixed:1e4".parse::<GammaPolicy>().unwrap(), GammaPolicy::Fixed(1e4));
        for bad in ["fixed", "eigen:-1", "bogus", "free:2", "fixed:x"] {
            assert!(bad.parse::<GammaPolicy>().is_err(), "{bad}");
        }
        for p in [GammaPolicy::ParameterFree, GammaPolicy::EigenScaled(2.5), GammaPolicy::Fixed(0.125)] {
            assert_eq!(p.to_string().parse::<GammaPolicy>().unwrap(), p);
        }
    }
}
