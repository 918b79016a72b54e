use super::knots::{eval_basis_1d, BasisEval, KnotVector};
use super::SplineError;

/// Tensor-product NURBS patch with one or two parametric directions.
///
/// Control points are stored with the first parametric index running fastest:
/// `A = i + n_u * j`. One-dimensional patches (rods) keep the y coordinate at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsPatch {
    knots: Vec<KnotVector>,
    control_points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

/// Geometry and rational basis at a point of a surface patch.
#[derive(Debug, Clone)]
pub struct SurfacePoint {
    pub point: [f64; 2],
    /// `jacobian[i][j] = d x_i / d xi_j`.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    /// Second parametric derivatives of each coordinate: `[uu, uv, vv]`.
    pub map_second: [[f64; 3]; 2],
    /// Local (patch) control point indices of the nonzero functions.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    /// Physical gradients.
    pub gradients: Vec<[f64; 2]>,
    /// Physical second derivatives `[xx, xy, yy]`.
    pub hessians: Vec<[f64; 3]>,
}

/// Geometry and rational basis at a point of a curve (rod) patch.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub x: f64,
    pub dx: f64,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

/// Parametric (reference) rational basis with derivatives, before any chain rule.
#[derive(Debug, Clone)]
pub(crate) struct ParametricBasis {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    /// `[d/du, d/dv]`
    pub first: Vec<[f64; 2]>,
    /// `[uu, uv, vv]`
    pub second: Vec<[f64; 3]>,
}

impl NurbsPatch {
    pub fn new(knots: Vec<KnotVector>, control_points: Vec<[f64; 2]>, weights: Vec<f64>) -> Result<Self, SplineError> {
        if knots.is_empty() || knots.len() > 2 {
            return Err(SplineError::InvalidPatch("one or two parametric directions required".into()));
        }
        let n: usize = knots.iter().map(|k| k.num_basis()).product();
        if control_points.len() != n || weights.len() != n {
            return Err(SplineError::InvalidPatch(format!(
                "expected {n} control points and weights, got {} and {}",
                control_points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(SplineError::InvalidPatch("weights must be positive".into()));
        }
        if control_points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(SplineError::InvalidPatch("non-finite control point".into()));
        }
        Ok(Self { knots, control_points, weights })
    }

    /// Number of parametric directions (1 for rods, 2 for surfaces).
    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self, dir: usize) -> &KnotVector {
        &self.knots[dir]
    }

    pub fn all_knots(&self) -> &[KnotVector] {
        &self.knots
    }

    pub fn degree(&self, dir: usize) -> usize {
        self.knots[dir].degree()
    }

    pub fn max_degree(&self) -> usize {
        self.knots.iter().map(|k| k.degree()).max().unwrap_or(0)
    }

    /// Basis counts per direction.
    pub fn shape(&self) -> (usize, usize) {
        let nu = self.knots[0].num_basis();
        let nv = self.knots.get(1).map_or(1, |k| k.num_basis());
        (nu, nv)
    }

    pub fn num_control_points(&self) -> usize {
        self.control_points.len()
    }

    pub fn control_points(&self) -> &[[f64; 2]] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.shape().0 * j
    }

    pub fn param_range(&self, dir: usize) -> (f64, f64) {
        (self.knots[dir].first(), self.knots[dir].last())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.control_points {
            c[0] += dx;
            c[1] += dy;
        }
        out
    }

    pub(crate) fn parametric_basis(&self, u: f64, v: f64) -> Result<ParametricBasis, SplineError> {
        let bu = eval_basis_1d(&self.knots[0], u)?;
        let bv = if self.dim() == 2 {
            eval_basis_1d(&self.knots[1], v)?
        } else {
            BasisEval { span: 0, ders: [vec![1.0], vec![0.0], vec![0.0]] }
        };
        let (nu, _) = self.shape();
        let (iu, iv) = (bu.first_index(), bv.first_index());
        let (pu, pv) = (bu.ders[0].len(), bv.ders[0].len());
        let count = pu * pv;
        let mut indices = Vec::with_capacity(count);
        let mut wn = Vec::with_capacity(count);
        let mut wd1 = Vec::with_capacity(count);
        let mut wd2 = Vec::with_capacity(count);
        let (mut w, mut w1, mut w2) = (0.0, [0.0; 2], [0.0; 3]);
        for b in 0..pv {
            for a in 0..pu {
                let idx = (iu + a) + nu * (iv + b);
                let wt = self.weights[idx];
                let n = bu.ders[0][a] * bv.ders[0][b] * wt;
                let d1 = [bu.ders[1][a] * bv.ders[0][b] * wt, bu.ders[0][a] * bv.ders[1][b] * wt];
                let d2 = [
                    bu.ders[2][a] * bv.ders[0][b] * wt,
                    bu.ders[1][a] * bv.ders[1][b] * wt,
                    bu.ders[0][a] * bv.ders[2][b] * wt,
                ];
                w += n;
                for k in 0..2 {
                    w1[k] += d1[k];
                }
                for k in 0..3 {
                    w2[k] += d2[k];
                }
                indices.push(idx);
                wn.push(n);
                wd1.push(d1);
                wd2.push(d2);
            }
        }
        let mut values = Vec::with_capacity(count);
        let mut first = Vec::with_capacity(count);
        let mut second = Vec::with_capacity(count);
        for k in 0..count {
            let r = wn[k] / w;
            let ru = (wd1[k][0] - r * w1[0]) / w;
            let rv = (wd1[k][1] - r * w1[1]) / w;
            let ruu = (wd2[k][0] - 2.0 * ru * w1[0] - r * w2[0]) / w;
            let ruv = (wd2[k][1] - ru * w1[1] - rv * w1[0] - r * w2[1]) / w;
            let rvv = (wd2[k][2] - 2.0 * rv * w1[1] - r * w2[2]) / w;
            values.push(r);
            first.push([ru, rv]);
            second.push([ruu, ruv, rvv]);
        }
        Ok(ParametricBasis { indices, values, first, second })
    }

    /// Physical point at a parameter (no Jacobian requirement).
    pub fn point(&self, u: f64, v: f64) -> Result<[f64; 2], SplineError> {
        let b = self.parametric_basis(u, v)?;
        let mut x = [0.0; 2];
        for (k, &a) in b.indices.iter().enumerate() {
            x[0] += b.values[k] * self.control_points[a][0];
            x[1] += b.values[k] * self.control_points[a][1];
        }
        Ok(x)
    }

    /// Point and parametric first derivatives `[dx/du, dx/dv]` (columns).
    pub fn point_and_tangents(&self, u: f64, v: f64) -> Result<([f64; 2], [[f64; 2]; 2]), SplineError> {
        let b = self.parametric_basis(u, v)?;
        let mut x = [0.0; 2];
        let mut t = [[0.0; 2]; 2];
        for (k, &a) in b.indices.iter().enumerate() {
            let c = self.control_points[a];
            for i in 0..2 {
                x[i] += b.values[k] * c[i];
                for j in 0..2 {
                    t[j][i] += b.first[k][j] * c[i];
                }
            }
        }
        Ok((x, t))
    }

    /// Full surface evaluation with physical first and second derivatives.
    pub fn eval(&self, u: f64, v: f64) -> Result<SurfacePoint, SplineError> {
        assert_eq!(self.dim(), 2, "surface evaluation on a curve patch");
        let b = self.parametric_basis(u, v)?;
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        let mut map_second = [[0.0; 3]; 2];
        for (k, &a) in b.indices.iter().enumerate() {
            let c = self.control_points[a];
            for i in 0..2 {
                x[i] += b.values[k] * c[i];
                jac[i][0] += b.first[k][0] * c[i];
                jac[i][1] += b.first[k][1] * c[i];
                for s in 0..3 {
                    map_second[i][s] += b.second[k][s] * c[i];
                }
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let scale = (jac[0][0].abs() + jac[0][1].abs() + jac[1][0].abs() + jac[1][1].abs()).powi(2);
        if !(det.abs() > 1e-13 * scale) {
            return Err(SplineError::SingularJacobian { u, v });
        }
        // inverse Jacobian: inv[j][i] = d xi_j / d x_i
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        let count = b.indices.len();
        let mut gradients = Vec::with_capacity(count);
        let mut hessians = Vec::with_capacity(count);
        for k in 0..count {
            let [ru, rv] = b.first[k];
            let g = [ru * inv[0][0] + rv * inv[1][0], ru * inv[0][1] + rv * inv[1][1]];
            // H_xi(R) - sum_i g_i H_xi(x_i), as symmetric [uu, uv, vv]
            let mut h = b.second[k];
            for s in 0..3 {
                h[s] -= g[0] * map_second[0][s] + g[1] * map_second[1][s];
            }
            // J^{-T} h J^{-1}
            let hm = [[h[0], h[1]], [h[1], h[2]]];
            let mut out = [[0.0; 2]; 2];
            for p in 0..2 {
                for q in 0..2 {
                    let mut s = 0.0;
                    for a in 0..2 {
                        for c in 0..2 {
                            s += inv[a][p] * hm[a][c] * inv[c][q];
                        }
                    }
                    out[p][q] = s;
                }
            }
            gradients.push(g);
            hessians.push([out[0][0], out[0][1], out[1][1]]);
        }
        Ok(SurfacePoint {
            point: x,
            jacobian: jac,
            det,
            map_second,
            indices: b.indices,
            values: b.values,
            gradients,
            hessians,
        })
    }

    /// Curve evaluation with physical derivatives along x.
    pub fn eval_curve(&self, u: f64) -> Result<CurvePoint, SplineError> {
        assert_eq!(self.dim(), 1, "curve evaluation on a surface patch");
        let b = self.parametric_basis(u, 0.0)?;
        let (mut x, mut dx, mut ddx) = (0.0, 0.0, 0.0);
        for (k, &a) in b.indices.iter().enumerate() {
            let c = self.control_points[a][0];
            x += b.values[k] * c;
            dx += b.first[k][0] * c;
            ddx += b.second[k][0] * c;
        }
        if dx.abs() < 1e-14 {
            return Err(SplineError::SingularJacobian { u, v: 0.0 });
        }
        let first: Vec<f64> = b.first.iter().map(|d| d[0] / dx).collect();
        let second = b
            .second
            .iter()
            .zip(&first)
            .map(|(d2, d1)| (d2[0] - d1 * ddx) / (dx * dx))
            .collect();
        Ok(CurvePoint { x, dx, indices: b.indices, values: b.values, first, second })
    }

    /// Insert `u` once in direction `dir` (Boehm), geometry unchanged.
    pub fn insert_knot(&self, dir: usize, u: f64) -> Result<Self, SplineError> {
        let kv = &self.knots[dir];
        let (lo, hi) = (kv.first(), kv.last());
        if !(u > lo && u < hi) {
            return Err(SplineError::Domain { value: u, lo, hi });
        }
        if kv.multiplicity(u) >= kv.degree() {
            return Err(SplineError::InvalidKnots(format!("knot {u} already has full multiplicity")));
        }
        let p = kv.degree();
        let t = kv.values();
        let k = kv.find_span(u)?;
        let (nu, nv) = self.shape();
        let new_kv = kv.with_inserted(u);
        let (mu, mv) = if dir == 0 { (nu + 1, nv) } else { (nu, nv + 1) };
        let mut pts = vec![[0.0; 2]; mu * mv];
        let mut wts = vec![0.0; mu * mv];
        let lines = if dir == 0 { nv } else { nu };
        let n_old = kv.num_basis();
        for line in 0..lines {
            let old = |i: usize| if dir == 0 { i + nu * line } else { line + nu * i };
            let new = |i: usize| if dir == 0 { i + mu * line } else { line + mu * i };
            let hom = |i: usize| {
                let w = self.weights[old(i)];
                let c = self.control_points[old(i)];
                [c[0] * w, c[1] * w, w]
            };
            for i in 0..=n_old {
                let q = if i + p <= k {
                    hom(i)
                } else if i > k {
                    hom(i - 1)
                } else {
                    let alpha = (u - t[i]) / (t[i + p] - t[i]);
                    let a = hom(i);
                    let b = hom(i - 1);
                    [
                        alpha * a[0] + (1.0 - alpha) * b[0],
                        alpha * a[1] + (1.0 - alpha) * b[1],
                        alpha * a[2] + (1.0 - alpha) * b[2],
                    ]
                };
                let idx = new(i);
                wts[idx] = q[2];
                pts[idx] = [q[0] / q[2], q[1] / q[2]];
            }
        }
        let mut knots = self.knots.clone();
        knots[dir] = new_kv;
        Self::new(knots, pts, wts)
    }

    /// Split every nonzero span into `subdivisions[dir]` equal parts.
    pub fn h_refine(&self, subdivisions: &[usize]) -> Result<Self, SplineError> {
        if subdivisions.len() != self.dim() || subdivisions.iter().any(|&s| s == 0) {
            return Err(SplineError::InvalidPatch(
                "one subdivision count >= 1 per parametric direction required".into(),
            ));
        }
        let mut out = self.clone();
        for (dir, &s) in subdivisions.iter().enumerate() {
            let spans = self.knots[dir].spans();
            for (_, a, b) in spans {
                for k in 1..s {
                    out = out.insert_knot(dir, a + (b - a) * k as f64 / s as f64)?;
                }
            }
        }
        Ok(out)
    }

    /// Uniform refinement with the same count in every direction.
    pub fn refined(&self, subdivisions: usize) -> Result<Self, SplineError> {
        self.h_refine(&vec![subdivisions; self.dim()])
    }

    /// Raise the degree of a single-span (Bezier) direction by one.
    pub fn elevate_bezier(&self, dir: usize) -> Result<Self, SplineError> {
        let kv = &self.knots[dir];
        if kv.num_elements() != 1 {
            return Err(SplineError::Construction("Bezier elevation needs a single span".into()));
        }
        let p = kv.degree();
        let (nu, nv) = self.shape();
        let (mu, mv) = if dir == 0 { (nu + 1, nv) } else { (nu, nv + 1) };
        let lines = if dir == 0 { nv } else { nu };
        let mut pts = vec![[0.0; 2]; mu * mv];
        let mut wts = vec![0.0; mu * mv];
        for line in 0..lines {
            let old = |i: usize| if dir == 0 { i + nu * line } else { line + nu * i };
            let new = |i: usize| if dir == 0 { i + mu * line } else { line + mu * i };
            let hom = |i: usize| {
                let w = self.weights[old(i)];
                let c = self.control_points[old(i)];
                [c[0] * w, c[1] * w, w]
            };
            for i in 0..=p + 1 {
                let a = i as f64 / (p + 1) as f64;
                let mut q = [0.0; 3];
                if i > 0 {
                    let h = hom(i - 1);
                    for c in 0..3 {
                        q[c] += a * h[c];
                    }
                }
                if i <= p {
                    let h = hom(i);
                    for c in 0..3 {
                        q[c] += (1.0 - a) * h[c];
                    }
                }
                let idx = new(i);
                wts[idx] = q[2];
                pts[idx] = [q[0] / q[2], q[1] / q[2]];
            }
        }
        let mut knots = self.knots.clone();
        knots[dir] = KnotVector::uniform(p + 1, 1, kv.first(), kv.last());
        Self::new(knots, pts, wts)
    }
}
