//! Element loops: bulk stiffness and mass forms, loads, stresses and error norms.

mod bulk;
mod load;
mod post;

pub use bulk::{assemble_elasticity, assemble_kirchhoff, assemble_mass_rod, assemble_stiffness_rod};
pub use load::{assemble_load, assemble_traction, LoadSpec};
pub use post::{
    compute_stress, error_norms, error_norms_against, l2_projection, AnalyticField, ErrorNorms, FieldEval, ReferenceValue,
};

use thiserror::Error;

use crate::linalg::{CooMatrix, DofReduction, LinalgError, SparseMatrix, Symmetry};
use crate::model::{DofMap, ModelError, MultiPatchModel};
use crate::splines::SplineError;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("reference solution has zero norm")]
    ZeroReference,
}

/// Global matrix (triplets), right-hand side and DoF numbering.
///
/// The first `bulk_len` triplets hold the bulk form `a(u, v)`; boundary and
/// interface terms are appended after them.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub dof_map: DofMap,
    matrix: CooMatrix,
    pub rhs: Vec<f64>,
    symmetry: Symmetry,
    bulk_len: usize,
}

impl AssembledSystem {
    pub fn new(dof_map: DofMap) -> Self {
        let n = dof_map.total();
        Self { dof_map, matrix: CooMatrix::new(n), rhs: vec![0.0; n], symmetry: Symmetry::Symmetric, bulk_len: 0 }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.matrix.push(row, col, value);
    }

    pub fn add_rhs(&mut self, row: usize, value: f64) {
        self.rhs[row] += value;
    }

    pub fn add_to_rhs(&mut self, f: &[f64]) {
        assert_eq!(f.len(), self.rhs.len());
        for (r, v) in self.rhs.iter_mut().zip(f) {
            *r += v;
        }
    }

    /// Marks everything added so far as the bulk form.
    pub fn mark_bulk(&mut self) {
        self.bulk_len = self.matrix.len();
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn set_symmetry(&mut self, symmetry: Symmetry) {
        self.symmetry = symmetry;
    }

    pub fn triplets(&self) -> &CooMatrix {
        &self.matrix
    }

    pub fn matrix(&self) -> SparseMatrix {
        self.matrix.to_csr(self.symmetry)
    }

    /// The bulk form only.
    pub fn bulk_matrix(&self) -> SparseMatrix {
        let mut bulk = self.matrix.clone();
        bulk.truncate(self.bulk_len);
        bulk.to_csr(Symmetry::Symmetric)
    }

    /// Everything added after the bulk form.
    pub fn boundary_matrix(&self) -> SparseMatrix {
        let entries = self.matrix.entries()[self.bulk_len..].iter().copied();
        SparseMatrix::from_entries(self.dim(), entries, self.symmetry)
    }

    /// Appends the triplets of another system with the same numbering.
    pub fn absorb(&mut self, other: &AssembledSystem) {
        self.matrix.extend_from(&other.matrix);
        self.add_to_rhs(&other.rhs);
        if other.symmetry == Symmetry::Nonsymmetric {
            self.symmetry = Symmetry::Nonsymmetric;
        }
    }

    /// `K u - F`.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let ku = self.matrix().mul_vec(u);
        ku.iter().zip(&self.rhs).map(|(a, b)| a - b).collect()
    }

    pub fn solve(&self) -> Result<FieldSolution, AssemblyError> {
        let x = crate::linalg::solve_linear(&self.matrix(), &self.rhs)?;
        Ok(FieldSolution::new(x, self.dof_map.clone()))
    }

    /// Solve after strong substitution constraints.
    pub fn solve_reduced(&self, reduction: &DofReduction) -> Result<FieldSolution, AssemblyError> {
        let k = reduction.reduce_matrix(&self.matrix());
        let f = reduction.reduce_vector(&self.rhs);
        let x = crate::linalg::solve_linear(&k, &f)?;
        Ok(FieldSolution::new(reduction.expand(&x), self.dof_map.clone()))
    }
}

/// Control-point coefficients of a discrete field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub coefficients: Vec<f64>,
    pub dof_map: DofMap,
}

impl FieldSolution {
    pub fn new(coefficients: Vec<f64>, dof_map: DofMap) -> Self {
        assert_eq!(coefficients.len(), dof_map.total());
        Self { coefficients, dof_map }
    }

    pub fn zeros(dof_map: DofMap) -> Self {
        Self { coefficients: vec![0.0; dof_map.total()], dof_map }
    }

    /// Value, gradient and Hessian of the field at a parameter of a surface patch.
    pub fn eval(&self, model: &MultiPatchModel, patch: usize, u: f64, v: f64) -> Result<FieldEval, AssemblyError> {
        let geo = model.patch(patch)?.eval(u, v)?;
        Ok(self.eval_at(patch, &geo))
    }

    pub fn eval_at(&self, patch: usize, geo: &crate::splines::SurfacePoint) -> FieldEval {
        let nc = self.dof_map.ncomp();
        let mut out = FieldEval { point: geo.point, ..FieldEval::default() };
        for (k, &a) in geo.indices.iter().enumerate() {
            for c in 0..nc.min(2) {
                let coef = self.coefficients[self.dof_map.dof(patch, a, c)];
                out.value[c] += geo.values[k] * coef;
                for j in 0..2 {
                    out.gradient[c][j] += geo.gradients[k][j] * coef;
                }
                for s in 0..3 {
                    out.hessian[c][s] += geo.hessians[k][s] * coef;
                }
            }
        }
        out
    }

    /// Value and first two derivatives on a curve (rod) patch.
    pub fn eval_curve(&self, model: &MultiPatchModel, patch: usize, u: f64) -> Result<[f64; 3], AssemblyError> {
        let geo = model.patch(patch)?.eval_curve(u)?;
        let mut out = [0.0; 3];
        for (k, &a) in geo.indices.iter().enumerate() {
            let coef = self.coefficients[self.dof_map.dof(patch, a, 0)];
            out[0] += geo.values[k] * coef;
            out[1] += geo.first[k] * coef;
            out[2] += geo.second[k] * coef;
        }
        Ok(out)
    }
}
