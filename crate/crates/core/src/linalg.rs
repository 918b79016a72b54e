//! Sparse storage, direct solves, dense eigensolvers and condition numbers.
//!
//! Everything heavy is delegated to `faer`; this module only fixes the
//! contracts the rest of the crate relies on (residual checks, B-orthonormal
//! eigenvectors, ascending ordering).

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use thiserror::Error;

pub use faer::c64;

/// Largest dimension for which dense SVD is attempted.
pub const DENSE_LIMIT: usize = 20_000;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular or numerically singular (dimension {dim}, estimated rank {rank:?})")]
    Singular { dim: usize, rank: Option<usize> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not positive definite after shift {shift:e}")]
    NotPositiveDefinite { shift: f64 },
    #[error("eigensolver failed to converge")]
    Eigensolver,
    #[error("dimension {0} exceeds the dense limit; use an iterative estimate")]
    TooLarge(usize),
    #[error("solution residual {residual:e} exceeds bound {bound:e}")]
    Residual { residual: f64, bound: f64 },
}

/// Structural symmetry flag carried alongside an assembled matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Nonsymmetric,
}

/// Coordinate-format accumulator; duplicates are summed on compression.
#[derive(Debug, Clone, Default)]
pub struct CooMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Self {
        Self { dim, entries: Vec::with_capacity(capacity) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((row, col, value));
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn truncate(&mut self, len: usize) {
        self.entries.truncate(len);
    }

    pub fn extend_from(&mut self, other: &CooMatrix) {
        assert_eq!(self.dim, other.dim);
        self.entries.extend_from_slice(&other.entries);
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            e.2 *= factor;
        }
    }

    pub fn to_csr(&self, symmetry: Symmetry) -> SparseMatrix {
        SparseMatrix::from_entries(self.dim, self.entries.iter().copied(), symmetry)
    }
}

/// Compressed sparse row matrix (square).
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetry: Symmetry,
}

impl SparseMatrix {
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        symmetry: Symmetry,
    ) -> Self {
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(entries.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r},{c}) outside dimension {dim}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, col_idx, values, symmetry }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_entries(dim, (0..dim).map(|i| (i, i, 1.0)), Symmetry::Symmetric)
    }

    pub fn from_dense(dense: &Mat<f64>) -> Self {
        let n = dense.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if dense[(i, j)] != 0.0 {
                    entries.push((i, j, dense[(i, j)]));
                }
            }
        }
        let mut m = Self::from_entries(n, entries, Symmetry::Nonsymmetric);
        if m.is_symmetric(1e-14) {
            m.symmetry = Symmetry::Symmetric;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn set_symmetry(&mut self, symmetry: Symmetry) {
        self.symmetry = symmetry;
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for (i, j, v) in self.iter() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest |K_ij - K_ji|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, j, v) in self.iter() {
            if j > i {
                worst = worst.max((v - self.get(j, i)).abs());
            } else if j < i && self.get(j, i) == 0.0 {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.max_asymmetry() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `self + other`, union of patterns.
    pub fn add(&self, other: &SparseMatrix) -> Self {
        assert_eq!(self.dim, other.dim);
        let symmetry = if self.symmetry == Symmetry::Symmetric && other.symmetry == Symmetry::Symmetric {
            Symmetry::Symmetric
        } else {
            Symmetry::Nonsymmetric
        };
        Self::from_entries(self.dim, self.iter().chain(other.iter()), symmetry)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.dim, self.dim);
        for (i, j, v) in self.iter() {
            m[(i, j)] += v;
        }
        m
    }

    /// Dense principal submatrix on `indices` (in the given order).
    pub fn dense_block(&self, indices: &[usize]) -> Mat<f64> {
        let mut local = vec![usize::MAX; self.dim];
        for (k, &g) in indices.iter().enumerate() {
            local[g] = k;
        }
        let mut m = Mat::<f64>::zeros(indices.len(), indices.len());
        for (a, &g) in indices.iter().enumerate() {
            for (j, v) in self.row(g) {
                let b = local[j];
                if b != usize::MAX {
                    m[(a, b)] += v;
                }
            }
        }
        m
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &triplets)
            .expect("compressed entries are unique and in range")
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sparse LU solve of `K x = F` with partial pivoting.
///
/// The result is accepted only if `|Kx - F| <= 1e-10 (|K| |x| + |F|)` with
/// the max-entry norm of `K` scaled by the row count.
pub fn solve_linear(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = matrix.dim();
    if rhs.len() != n {
        return Err(LinalgError::Dimension { expected: n, got: rhs.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let singular = |m: &SparseMatrix| LinalgError::Singular {
        dim: n,
        rank: if n <= 3000 { numerical_rank(m).ok() } else { None },
    };
    let faer_matrix = matrix.to_faer();
    // faer panics on an exactly zero pivot rather than reporting it
    let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| faer_matrix.sp_lu()))
        .map_err(|_| singular(matrix))?
        .map_err(|_| singular(matrix))?;
    let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    let sol = lu.solve(&b);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular(matrix));
    }
    // one step of iterative refinement keeps ill-conditioned Nitsche systems accurate
    let r: Vec<f64> = matrix.mul_vec(&x).iter().zip(rhs).map(|(kx, f)| f - kx).collect();
    let rb = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
    let dx = lu.solve(&rb);
    for i in 0..n {
        x[i] += dx[(i, 0)];
    }
    let residual = norm2(&matrix.mul_vec(&x).iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    let k_norm = matrix.max_abs() * (n as f64).sqrt();
    let bound = 1e-10 * (k_norm * norm2(&x) + norm2(rhs));
    if !residual.is_finite() {
        return Err(singular(matrix));
    }
    if residual > bound && residual > 1e-300 {
        return Err(LinalgError::Residual { residual, bound });
    }
    Ok(x)
}

fn numerical_rank(matrix: &SparseMatrix) -> Result<usize, LinalgError> {
    let sv = matrix.to_dense().singular_values().map_err(|_| LinalgError::Eigensolver)?;
    let smax = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    let tol = smax * 1e-13 * matrix.dim() as f64;
    Ok(sv.iter().filter(|&&s| s > tol).count())
}

/// Eigenpairs of `A v = λ B v`, ascending.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`, normalized so `vᵀ B v = 1`.
    pub vectors: Mat<f64>,
}

impl GeneralizedEigen {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

fn symmetrize(m: &Mat<f64>) -> Mat<f64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

fn lower_cholesky(b: &Mat<f64>, shift: f64) -> Result<Mat<f64>, LinalgError> {
    let n = b.nrows();
    let mut shifted = symmetrize(b);
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    let llt = shifted.llt(Side::Lower).map_err(|_| LinalgError::NotPositiveDefinite { shift })?;
    Ok(llt.L().to_owned())
}

/// `L⁻¹ X` for lower-triangular `L`.
fn solve_lower(l: &Mat<f64>, x: &Mat<f64>) -> Mat<f64> {
    let mut out = x.clone();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), out.as_mut(), faer::Par::Seq);
    out
}

/// `L⁻ᵀ X` for lower-triangular `L`.
fn solve_lower_transpose(l: &Mat<f64>, x: &Mat<f64>) -> Mat<f64> {
    let mut out = x.clone();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(
        l.as_ref().transpose(),
        out.as_mut(),
        faer::Par::Seq,
    );
    out
}

/// Dense generalized symmetric eigenproblem `A v = λ (B + shift I) v`.
///
/// `A` and `B` are symmetrized before use; `B + shift I` must be positive
/// definite.
pub fn generalized_symmetric_eig(a: &Mat<f64>, b: &Mat<f64>, shift: f64) -> Result<GeneralizedEigen, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(LinalgError::Dimension { expected: n, got: b.nrows() });
    }
    if n == 0 {
        return Ok(GeneralizedEigen { values: Vec::new(), vectors: Mat::zeros(0, 0) });
    }
    let l = lower_cholesky(b, shift)?;
    let la = solve_lower(&l, &symmetrize(a));
    let c = symmetrize(&solve_lower(&l, &la.transpose().to_owned()));
    let evd = c.self_adjoint_eigen(Side::Lower).map_err(|_| LinalgError::Eigensolver)?;
    let s = evd.S();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].partial_cmp(&s[j]).unwrap_or(std::cmp::Ordering::Equal));
    let u = evd.U().to_owned();
    let sorted_u = Mat::from_fn(n, n, |i, k| u[(i, order[k])]);
    let vectors = solve_lower_transpose(&l, &sorted_u);
    Ok(GeneralizedEigen { values: order.iter().map(|&k| s[k]).collect(), vectors })
}

/// Eigenpairs of the (possibly nonsymmetric) pencil `K v = λ M v` with SPD `M`.
#[derive(Debug, Clone)]
pub struct ComplexEigen {
    /// Sorted by ascending modulus.
    pub values: Vec<c64>,
    /// Column `k` pairs with `values[k]`.
    pub vectors: Mat<c64>,
}

pub fn generalized_eig(k: &Mat<f64>, m: &Mat<f64>) -> Result<ComplexEigen, LinalgError> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(LinalgError::Dimension { expected: n, got: m.nrows() });
    }
    let l = lower_cholesky(m, 0.0)?;
    let lk = solve_lower(&l, k);
    // C = L⁻¹ K L⁻ᵀ = (L⁻¹ (L⁻¹ K)ᵀ)ᵀ
    let c = solve_lower(&l, &lk.transpose().to_owned()).transpose().to_owned();
    let evd = c.eigen().map_err(|_| LinalgError::Eigensolver)?;
    let s = evd.S();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].norm().partial_cmp(&s[j].norm()).unwrap_or(std::cmp::Ordering::Equal));
    let values: Vec<c64> = order.iter().map(|&i| s[i]).collect();
    // x = L⁻ᵀ y, applied to real and imaginary parts separately
    let re = Mat::from_fn(n, n, |i, k| u[(i, order[k])].re);
    let im = Mat::from_fn(n, n, |i, k| u[(i, order[k])].im);
    let xr = solve_lower_transpose(&l, &re);
    let xi = solve_lower_transpose(&l, &im);
    let vectors = Mat::from_fn(n, n, |i, k| c64::new(xr[(i, k)], xi[(i, k)]));
    Ok(ComplexEigen { values, vectors })
}

/// 2-norm condition number `σ_max / σ_min` by dense SVD.
pub fn condition_number(matrix: &SparseMatrix) -> Result<f64, LinalgError> {
    if matrix.dim() > DENSE_LIMIT {
        return Err(LinalgError::TooLarge(matrix.dim()));
    }
    dense_condition_number(&matrix.to_dense())
}

pub fn dense_condition_number(m: &Mat<f64>) -> Result<f64, LinalgError> {
    let sv = m.singular_values().map_err(|_| LinalgError::Eigensolver)?;
    let smax = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let smin = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
    if smin <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Strong linear constraints by substitution: each full DoF is either fixed at
/// zero or equal to `coef * reduced[index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofReduction {
    map: Vec<Option<(usize, f64)>>,
    reduced: usize,
}

impl DofReduction {
    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).map(|i| Some((i, 1.0))).collect(), reduced: n }
    }

    /// `fixed` DoFs are set to zero; each `(slave, master, coef)` enforces
    /// `u[slave] = coef * u[master]`. Masters must be free DoFs.
    pub fn new(n: usize, fixed: &[usize], ties: &[(usize, usize, f64)]) -> Self {
        let mut kind = vec![0u8; n];
        for &f in fixed {
            kind[f] = 1;
        }
        for &(s, m, _) in ties {
            assert!(kind[m] == 0, "tie master {m} is constrained");
            kind[s] = 2;
        }
        let mut map = vec![None; n];
        let mut next = 0;
        for i in 0..n {
            if kind[i] == 0 {
                map[i] = Some((next, 1.0));
                next += 1;
            }
        }
        for &(s, m, c) in ties {
            let (idx, base) = map[m].expect("master is free");
            map[s] = Some((idx, base * c));
        }
        Self { map, reduced: next }
    }

    pub fn full_dim(&self) -> usize {
        self.map.len()
    }

    pub fn reduced_dim(&self) -> usize {
        self.reduced
    }

    pub fn is_identity(&self) -> bool {
        self.reduced == self.map.len() && self.map.iter().enumerate().all(|(i, m)| *m == Some((i, 1.0)))
    }

    pub fn target(&self, full: usize) -> Option<(usize, f64)> {
        self.map[full]
    }

    /// `Tᵀ K T`.
    pub fn reduce_matrix(&self, k: &SparseMatrix) -> SparseMatrix {
        let entries = k.iter().filter_map(|(i, j, v)| {
            let (ri, ci) = self.map[i]?;
            let (rj, cj) = self.map[j]?;
            Some((ri, rj, ci * cj * v))
        });
        SparseMatrix::from_entries(self.reduced, entries, k.symmetry())
    }

    /// `Tᵀ f`.
    pub fn reduce_vector(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.reduced];
        for (i, m) in self.map.iter().enumerate() {
            if let Some((r, c)) = m {
                out[*r] += c * f[i];
            }
        }
        out
    }

    /// Reduced coordinates of a full vector, read from the first DoF mapped to each.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.reduced];
        let mut seen = vec![false; self.reduced];
        for (i, m) in self.map.iter().enumerate() {
            if let Some((r, c)) = *m {
                if !seen[r] && c != 0.0 {
                    out[r] = u[i] / c;
                    seen[r] = true;
                }
            }
        }
        out
    }

    /// `T x`.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|m| m.map_or(0.0, |(r, c)| c * x[r])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn random_dense(n: usize, seed: &mut u64) -> Mat<f64> {
        Mat::from_fn(n, n, |_, _| lcg(seed))
    }

    fn random_spd(n: usize, seed: &mut u64) -> Mat<f64> {
        let a = random_dense(n, seed);
        let mut s = &a * a.transpose();
        for i in 0..n {
            s[(i, i)] += n as f64 * 0.1;
        }
        s
    }

    #[test]
    fn reduction_with_fixed_and_tied_dofs() {
        // u1 = 0, u3 = -u2
        let r = DofReduction::new(4, &[1], &[(3, 2, -1.0)]);
        assert_eq!(r.reduced_dim(), 2);
        assert_eq!(r.expand(&[5.0, 7.0]), vec![5.0, 0.0, 7.0, -7.0]);
        assert_eq!(r.reduce_vector(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, -1.0]);
        let k = SparseMatrix::identity(4);
        let kr = r.reduce_matrix(&k);
        assert_eq!(kr.get(1, 1), 2.0);
        assert!(DofReduction::identity(3).is_identity());
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let k = SparseMatrix::identity(5);
        let f = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(solve_linear(&k, &f).unwrap(), f);
    }

    #[test]
    fn nonsymmetric_two_by_two() {
        let k = SparseMatrix::from_entries(2, [(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)], Symmetry::Nonsymmetric);
        let x = solve_linear(&k, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_spd_residual() {
        let mut seed = 7;
        let a = random_spd(50, &mut seed);
        let k = SparseMatrix::from_dense(&a);
        let f: Vec<f64> = (0..50).map(|_| lcg(&mut seed)).collect();
        let x = solve_linear(&k, &f).unwrap();
        let r: Vec<f64> = k.mul_vec(&x).iter().zip(&f).map(|(a, b)| a - b).collect();
        assert!(norm2(&r) <= 1e-10 * (k.max_abs() * 50.0 * norm2(&x) + norm2(&f)));
    }

    #[test]
    fn singular_matrix_reports_rank() {
        let k = SparseMatrix::from_entries(
            3,
            [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
            Symmetry::Symmetric,
        );
        match solve_linear(&k, &[1.0, 2.0, 3.0]) {
            Err(LinalgError::Singular { rank, .. }) => assert_eq!(rank, Some(2)),
            Err(LinalgError::Residual { .. }) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let mut coo = CooMatrix::new(2);
        coo.push(0, 0, 1.0);
        coo.push(0, 0, 2.0);
        coo.push(1, 0, 4.0);
        let k = coo.to_csr(Symmetry::Nonsymmetric);
        assert_eq!(k.get(0, 0), 3.0);
        assert_eq!(k.get(1, 0), 4.0);
        assert_eq!(k.get(0, 1), 0.0);
        assert_eq!(k.nnz(), 2);
        assert_eq!(k.max_asymmetry(), 4.0);
    }

    #[test]
    fn diagonal_generalized_eig() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, 4.0][i] } else { 0.0 });
        let b = Mat::<f64>::identity(2, 2);
        let e = generalized_symmetric_eig(&a, &b, 0.0).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn equal_pencil_has_unit_spectrum() {
        let mut seed = 3;
        let a = random_spd(8, &mut seed);
        let e = generalized_symmetric_eig(&a, &a, 0.0).unwrap();
        assert!(e.values.iter().all(|l| (l - 1.0).abs() < 1e-10));
    }

    #[test]
    fn random_pencil_residual_and_b_orthogonality() {
        let mut seed = 11;
        let n = 20;
        let a0 = random_dense(n, &mut seed);
        let a = symmetrize(&a0);
        let b = random_spd(n, &mut seed);
        let e = generalized_symmetric_eig(&a, &b, 0.0).unwrap();
        let a_norm = a.norm_l2();
        for k in 0..n {
            let v = e.vectors.col(k).to_owned();
            let av = &a * &v;
            let bv = &b * &v;
            let r = (&av - &bv * faer::Scale(e.values[k])).norm_l2();
            assert!(r <= 1e-8 * a_norm * v.norm_l2(), "residual {r}");
        }
        let gram = e.vectors.transpose() * &b * &e.vectors;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - target).abs() < 1e-9);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn indefinite_b_is_rejected() {
        let a = Mat::<f64>::identity(2, 2);
        let b = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, -1.0][i] } else { 0.0 });
        assert!(matches!(
            generalized_symmetric_eig(&a, &b, 0.0),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn complex_pencil_matches_symmetric_solver_for_symmetric_input() {
        let mut seed = 5;
        let k = random_spd(10, &mut seed);
        let m = random_spd(10, &mut seed);
        let sym = generalized_symmetric_eig(&k, &m, 0.0).unwrap();
        let gen = generalized_eig(&k, &m).unwrap();
        for (a, b) in sym.values.iter().zip(&gen.values) {
            assert!((a - b.re).abs() < 1e-9 * a.abs().max(1.0));
            assert!(b.im.abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn condition_numbers() {
        assert!((condition_number(&SparseMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        let d = SparseMatrix::from_entries(2, [(0, 0, 1.0), (1, 1, 1e6)], Symmetry::Symmetric);
        assert!((condition_number(&d).unwrap() - 1e6).abs() < 1e-6);
        // orthogonal matrix from a Givens-rotation product
        let n = 6;
        let mut q = Mat::<f64>::identity(n, n);
        for k in 0..n - 1 {
            let (s, c) = (0.3 + k as f64).sin_cos();
            let mut g = Mat::<f64>::identity(n, n);
            g[(k, k)] = c;
            g[(k + 1, k + 1)] = c;
            g[(k, k + 1)] = -s;
            g[(k + 1, k)] = s;
            q = &q * &g;
        }
        assert!((dense_condition_number(&q).unwrap() - 1.0).abs() < 1e-9);
    }
}
