//! Multi-patch models: materials, boundary tags, elements, DoF numbering and quadrature.

mod boundary;
mod description;
mod interface;
mod material;
mod quadrature;
mod topology;

pub use boundary::{
    boundary_quadrature, scalar_field, validate_tags, vector_field, BoundaryKind, BoundaryPoint, BoundarySelection,
    BoundaryTag, ScalarField, VectorField,
};
pub use description::ModelDescription;
pub use interface::{interface_breakpoints, interface_quadrature, project_onto_side, InterfacePoint, InterfaceSpec};
pub use material::{Material, MaterialMode};
pub use quadrature::{gauss_rule, QuadratureRule, MAX_GAUSS_POINTS};
pub use topology::{patch_elements, DofMap, Element, Side};

use thiserror::Error;

use crate::splines::{NurbsPatch, SplineError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("Gauss rule with {0} points is not available (1..=16)")]
    QuadratureOrder(usize),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("no patch with index {0}")]
    UnknownPatch(usize),
    #[error("invalid boundary tag: {0}")]
    Tag(String),
    #[error("interface mismatch near ({:.6}, {:.6}): {reason}", point[0], point[1])]
    Interface { point: [f64; 2], reason: String },
    #[error("model description, line {line}: {msg}")]
    Description { line: usize, msg: String },
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// A patch with its material.
#[derive(Debug, Clone)]
pub struct PatchEntry {
    pub patch: NurbsPatch,
    pub material: Material,
}

#[derive(Debug, Clone, Default)]
pub struct MultiPatchModel {
    patches: Vec<PatchEntry>,
    tags: Vec<BoundaryTag>,
    interfaces: Vec<InterfaceSpec>,
}

impl MultiPatchModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(patch: NurbsPatch, material: Material) -> Self {
        let mut m = Self::new();
        m.add_patch(patch, material);
        m
    }

    /// Adds a patch and returns its index.
    pub fn add_patch(&mut self, patch: NurbsPatch, material: Material) -> usize {
        self.patches.push(PatchEntry { patch, material });
        self.patches.len() - 1
    }

    pub fn add_tag(&mut self, selection: BoundarySelection, kind: BoundaryKind) -> Result<(), ModelError> {
        self.patch(selection.patch)?;
        self.tags.push(BoundaryTag { selection, kind });
        validate_tags(self).inspect_err(|_| {
            self.tags.pop();
        })
    }

    /// Registers an interface after checking the sides coincide at sample points.
    pub fn add_interface(&mut self, spec: InterfaceSpec) -> Result<usize, ModelError> {
        let (p1, s1) = spec.first;
        let (p2, s2) = spec.second;
        let patch1 = self.patch(p1)?;
        let patch2 = self.patch(p2)?;
        let scale = self.length_scale();
        let (lo, hi) = patch2.param_range(s2.running_dir());
        for k in 0..=10 {
            let t = lo + (hi - lo) * k as f64 / 10.0;
            let p = s2.param(patch2, t);
            let x = patch2.point(p[0], p[1])?;
            let (_, d) = project_onto_side(patch1, s1, x)?;
            if d > 1e-9 * scale {
                return Err(ModelError::Interface { point: x, reason: format!("sides are {d:e} apart") });
            }
        }
        self.interfaces.push(spec);
        Ok(self.interfaces.len() - 1)
    }

    pub fn patch(&self, id: usize) -> Result<&NurbsPatch, ModelError> {
        self.patches.get(id).map(|e| &e.patch).ok_or(ModelError::UnknownPatch(id))
    }

    pub fn material(&self, id: usize) -> Result<&Material, ModelError> {
        self.patches.get(id).map(|e| &e.material).ok_or(ModelError::UnknownPatch(id))
    }

    pub fn entries(&self) -> &[PatchEntry] {
        &self.patches
    }

    pub fn num_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn tags(&self) -> &[BoundaryTag] {
        &self.tags
    }

    pub fn interfaces(&self) -> &[InterfaceSpec] {
        &self.interfaces
    }

    /// Copy with every material's Young's modulus multiplied by `factor`.
    pub fn with_scaled_modulus(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for e in &mut out.patches {
            e.material = e.material.with_modulus(e.material.e * factor);
        }
        out
    }

    /// Largest extent of the control nets, used to scale geometric tolerances.
    pub fn length_scale(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for e in &self.patches {
            for c in e.patch.control_points() {
                for k in 0..2 {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                }
            }
        }
        (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300)
    }

    pub fn enumerate_elements(&self) -> Vec<Vec<Element>> {
        self.patches.iter().enumerate().map(|(i, e)| patch_elements(&e.patch, i)).collect()
    }

    pub fn global_dof_map(&self, dofs_per_control_point: usize) -> DofMap {
        let counts: Vec<usize> = self.patches.iter().map(|e| e.patch.num_control_points()).collect();
        DofMap::new(&counts, dofs_per_control_point)
    }
}

/// Same as [`MultiPatchModel::enumerate_elements`].
pub fn enumerate_elements(model: &MultiPatchModel) -> Vec<Vec<Element>> {
    model.enumerate_elements()
}

/// Same as [`MultiPatchModel::global_dof_map`].
pub fn global_dof_map(model: &MultiPatchModel, dofs_per_control_point: usize) -> DofMap {
    model.global_dof_map(dofs_per_control_point)
}
