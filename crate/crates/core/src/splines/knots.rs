use super::SplineError;

/// Open (clamped) knot vector of a given degree.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(values: Vec<f64>, degree: usize) -> Result<Self, SplineError> {
        let m = values.len();
        if m < 2 * (degree + 1) {
            return Err(SplineError::InvalidKnots(format!(
                "{m} knots cannot support degree {degree}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SplineError::InvalidKnots("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(SplineError::InvalidKnots("knots must be non-decreasing".into()));
        }
        let (a, b) = (values[0], values[m - 1]);
        if !(b > a) {
            return Err(SplineError::InvalidKnots("empty parameter range".into()));
        }
        if values[..=degree].iter().any(|&v| v != a) || values[m - 1 - degree..].iter().any(|&v| v != b) {
            return Err(SplineError::InvalidKnots(format!(
                "end knots must repeat {} times",
                degree + 1
            )));
        }
        let interior_excess = values[degree + 1..m - degree - 1]
            .iter()
            .any(|&v| values.iter().filter(|&&w| w == v).count() > degree);
        if interior_excess {
            return Err(SplineError::InvalidKnots(
                "interior knot multiplicity exceeds the degree".into(),
            ));
        }
        Ok(Self { values, degree })
    }

    /// Open knot vector on `[a, b]` with `elements` equal spans.
    pub fn uniform(degree: usize, elements: usize, a: f64, b: f64) -> Self {
        assert!(elements >= 1 && b > a);
        let mut values = vec![a; degree + 1];
        for k in 1..elements {
            values.push(a + (b - a) * k as f64 / elements as f64);
        }
        values.extend(std::iter::repeat(b).take(degree + 1));
        Self { values, degree }
    }

    /// Single-span Bernstein knot vector on `[0, 1]`.
    pub fn bezier(degree: usize) -> Self {
        Self::uniform(degree, 1, 0.0, 1.0)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_basis(&self) -> usize {
        self.values.len() - self.degree - 1
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Span index `k` with `t_k <= u < t_{k+1}`; the right end maps to the last nonzero span.
    pub fn find_span(&self, u: f64) -> Result<usize, SplineError> {
        let (lo, hi) = (self.first(), self.last());
        let tol = 1e-12 * (hi - lo);
        if !(u >= lo - tol && u <= hi + tol) {
            return Err(SplineError::Domain { value: u, lo, hi });
        }
        let n = self.num_basis();
        if u >= self.values[n] {
            return Ok(n - 1);
        }
        if u <= lo {
            return Ok(self.degree);
        }
        // first index with t > u, minus one
        let k = self.values.partition_point(|&t| t <= u) - 1;
        Ok(k)
    }

    /// Distinct knot values (element boundaries).
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &v in &self.values {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Nonzero spans as `(span index, lower, upper)`.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        let n = self.num_basis();
        (self.degree..n)
            .filter(|&k| self.values[k + 1] > self.values[k])
            .map(|k| (k, self.values[k], self.values[k + 1]))
            .collect()
    }

    pub fn num_elements(&self) -> usize {
        self.spans().len()
    }

    pub fn multiplicity(&self, u: f64) -> usize {
        self.values.iter().filter(|&&v| v == u).count()
    }

    /// Greville abscissae (control point parameter positions).
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| {
                if p == 0 {
                    0.5 * (self.values[i] + self.values[i + 1])
                } else {
                    self.values[i + 1..=i + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    pub(crate) fn with_inserted(&self, u: f64) -> Self {
        let k = self.values.partition_point(|&t| t <= u);
        let mut values = self.values.clone();
        values.insert(k, u);
        Self { values, degree: self.degree }
    }
}

/// The `p + 1` nonzero basis functions at a parameter, with derivatives.
#[derive(Debug, Clone)]
pub struct BasisEval {
    /// Knot span; the functions are `N_{span-p} .. N_{span}`.
    pub span: usize,
    /// `ders[k][j]` is the `k`-th derivative of `N_{span-p+j}` (k = 0, 1, 2).
    pub ders: [Vec<f64>; 3],
}

impl BasisEval {
    pub fn first_index(&self) -> usize {
        self.span + 1 - self.ders[0].len()
    }
}

/// Cox-de Boor evaluation of values and first two derivatives in the local span.
pub fn eval_basis_1d(knots: &KnotVector, u: f64) -> Result<BasisEval, SplineError> {
    let span = knots.find_span(u)?;
    let u = u.clamp(knots.first(), knots.last());
    let p = knots.degree();
    let t = knots.values();
    let nd = 2.min(p);

    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - t[span + 1 - j];
        right[j] = t[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = [vec![0.0; p + 1], vec![0.0; p + 1], vec![0.0; p + 1]];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=nd {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    Ok(BasisEval { span, ders })
}
