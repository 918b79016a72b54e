use nitsche_iga::assembly::AnalyticField;
use nitsche_iga::model::Material;

/// Bivariate polynomial as `(coefficient, power of x, power of y)` terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<(f64, u32, u32)>,
}

fn mono(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Self {
        Self { terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|&(_, i, j)| i + j).max().unwrap_or(0)
    }

    /// Keeps the terms of total degree `<= order`.
    pub fn truncated(&self, order: u32) -> Self {
        Self { terms: self.terms.iter().copied().filter(|&(_, i, j)| i + j <= order).collect() }
    }

    /// Partial derivative `d^(a+b) / dx^a dy^b`.
    pub fn derivative(&self, a: u32, b: u32) -> Self {
        let mut terms = Vec::new();
        for &(c, i, j) in &self.terms {
            if i < a || j < b {
                continue;
            }
            let fi: f64 = ((i - a + 1)..=i).map(f64::from).product();
            let fj: f64 = ((j - b + 1)..=j).map(f64::from).product();
            terms.push((c * fi * fj, i - a, j - b));
        }
        Self { terms }
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.terms.iter().map(|&(c, i, j)| c * mono(p[0], i) * mono(p[1], j)).sum()
    }

    /// `(d/dx, d/dy)` at a point.
    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        [self.derivative(1, 0).eval(p), self.derivative(0, 1).eval(p)]
    }

    /// `(xx, xy, yy)` at a point.
    pub fn hessian(&self, p: [f64; 2]) -> [f64; 3] {
        [self.derivative(2, 0).eval(p), self.derivative(1, 1).eval(p), self.derivative(0, 2).eval(p)]
    }
}

/// Two-component polynomial displacement field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialField {
    pub ux: Polynomial,
    pub uy: Polynomial,
}

impl PolynomialField {
    pub fn truncated(&self, order: u32) -> Self {
        Self { ux: self.ux.truncated(order), uy: self.uy.truncated(order) }
    }

    pub fn value(&self, p: [f64; 2]) -> [f64; 2] {
        [self.ux.eval(p), self.uy.eval(p)]
    }

    pub fn gradient(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        [self.ux.gradient(p), self.uy.gradient(p)]
    }

    pub fn hessian(&self, p: [f64; 2]) -> [[f64; 3]; 2] {
        [self.ux.hessian(p), self.uy.hessian(p)]
    }

    /// `-div(sigma(u))` for a material.
    pub fn body_force(&self, material: &Material, p: [f64; 2]) -> [f64; 2] {
        let h = self.hessian(p);
        // d(grad u)/dx and d(grad u)/dy
        let gx = [[h[0][0], h[0][1]], [h[1][0], h[1][1]]];
        let gy = [[h[0][1], h[0][2]], [h[1][1], h[1][2]]];
        let sx = material.stress(gx);
        let sy = material.stress(gy);
        [-(sx[0] + sy[2]), -(sx[2] + sy[1])]
    }

    pub fn to_analytic(&self) -> AnalyticField {
        let (a, b, c) = (self.clone(), self.clone(), self.clone());
        AnalyticField::new(move |p| a.value(p), move |p| b.gradient(p)).with_hessian(move |p| c.hessian(p))
    }
}

/// The equilibrated quartic displacement field used by the patch and coupling tests.
///
/// Divergence-free stress under plane stress with `nu = 0.25`; every truncation by
/// total degree keeps that property.
pub fn quartic_field() -> PolynomialField {
    let ux = vec![
        (0.25, 0, 0),
        (1.0, 1, 0),
        (3.0, 0, 1),
        (-2.0, 2, 0),
        (-4.0, 1, 1),
        (2.5, 0, 2),
        (-2.0, 3, 0),
        (1.0, 2, 1),
        (-4.0, 1, 2),
        (-1.0 / 3.0, 0, 3),
        (-7.0 / 32.0, 4, 0),
        (-19.0 / 24.0, 3, 1),
        (1.0, 2, 2),
        (1.0, 1, 3),
        (-11.0 / 96.0, 0, 4),
    ];
    let uy = vec![
        (1.0, 0, 0),
        (0.5, 1, 0),
        (2.0, 0, 1),
        (-2.0 / 3.0, 2, 0),
        (17.0 / 5.0, 1, 1),
        (1.5, 0, 2),
        (1.0 / 3.0, 3, 0),
        (12.0, 2, 1),
        (-1.0, 1, 2),
        (-2.0 / 3.0, 0, 3),
        (-11.0 / 96.0, 4, 0),
        (1.0, 3, 1),
        (1.0, 2, 2),
        (-19.0 / 24.0, 1, 3),
        (-7.0 / 32.0, 0, 4),
    ];
    PolynomialField { ux: Polynomial::new(ux), uy: Polynomial::new(uy) }
}

/// Quartic field truncated to total degree `order`.
pub fn manufactured_field(order: u32) -> PolynomialField {
    quartic_field().truncated(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derivative_of_monomial() {
        let p = Polynomial::new(vec![(2.0, 3, 2)]);
        let d = p.derivative(2, 1);
        assert_eq!(d.terms, vec![(24.0, 1, 1)]);
        assert_eq!(p.derivative(4, 0).terms, vec![]);
    }

    #[test]
    fn truncation_degrees() {
        for k in 0..=4 {
            let f = manufactured_field(k);
            assert_eq!(f.ux.degree(), k);
            assert_eq!(f.uy.degree(), k);
        }
    }

    #[test]
    fn quartic_is_equilibrated_in_plane_stress() {
        let m = Material::plane_stress(1000.0, 0.25).unwrap();
        for order in 0..=4 {
            let f = manufactured_field(order);
            for p in [[0.0, 0.0], [3.0, -2.0], [20.0, 20.0], [-7.5, 11.0]] {
                let b = f.body_force(&m, p);
                assert!(b[0].abs() < 1e-9 && b[1].abs() < 1e-9, "order {order}: {b:?}");
            }
        }
    }

    #[test]
    fn plane_strain_is_not_equilibrated() {
        let m = Material::plane_strain(1.0, 0.25).unwrap();
        let b = quartic_field().body_force(&m, [0.0, 0.0]);
        assert!((b[0] - 2.0 / 25.0).abs() < 1e-12 && (b[1] - 2.0 / 15.0).abs() < 1e-12, "{b:?}");
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(x in -5.0..5.0f64, y in -5.0..5.0f64) {
            let f = quartic_field();
            let h = 1e-5;
            let g = f.gradient([x, y]);
            let hs = f.hessian([x, y]);
            for c in 0..2 {
                let fx = (f.value([x + h, y])[c] - f.value([x - h, y])[c]) / (2.0 * h);
                let fy = (f.value([x, y + h])[c] - f.value([x, y - h])[c]) / (2.0 * h);
                let scale = 1.0 + g[c][0].abs() + g[c][1].abs();
                prop_assert!((fx - g[c][0]).abs() < 1e-6 * scale);
                prop_assert!((fy - g[c][1]).abs() < 1e-6 * scale);
                let gxy = (f.gradient([x, y + h])[c][0] - f.gradient([x, y - h])[c][0]) / (2.0 * h);
                prop_assert!((gxy - hs[c][1]).abs() < 1e-6 * (1.0 + hs[c][1].abs()));
            }
        }
    }
}
