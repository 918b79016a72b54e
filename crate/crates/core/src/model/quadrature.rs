use super::ModelError;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.points.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

pub const MAX_GAUSS_POINTS: usize = 16;

/// `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule, ModelError> {
    if n == 0 || n > MAX_GAUSS_POINTS {
        return Err(ModelError::QuadratureOrder(n));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok(QuadratureRule { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point() {
        let r = gauss_rule(1).unwrap();
        assert_eq!(r.points, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
    }

    #[test]
    fn two_points() {
        let r = gauss_rule(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.points[0] + s).abs() < 1e-15 && (r.points[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_points_integrate_x4() {
        let r = gauss_rule(3).unwrap();
        let i: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((i - 0.4).abs() < 1e-14);
    }

    #[test]
    fn exactness_up_to_2n_minus_1() {
        for n in 1..=MAX_GAUSS_POINTS {
            let r = gauss_rule(n).unwrap();
            for d in 0..2 * n {
                let i: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((i - exact).abs() < 1e-14, "n={n} d={d} got {i}");
            }
        }
    }

    #[test]
    fn out_of_range() {
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(17).is_err());
    }
}
