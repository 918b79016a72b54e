use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialMode {
    PlaneStress,
    PlaneStrain,
    KirchhoffPlate { thickness: f64 },
    /// Axial rod with unit cross-section and unit density.
    Rod,
}

/// Isotropic linear elastic material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub e: f64,
    pub nu: f64,
    pub mode: MaterialMode,
}

impl Material {
    pub fn new(e: f64, nu: f64, mode: MaterialMode) -> Result<Self, ModelError> {
        if !(e > 0.0 && e.is_finite()) {
            return Err(ModelError::InvalidMaterial(format!("Young's modulus must be positive, got {e}")));
        }
        if !(0.0..0.5).contains(&nu) {
            return Err(ModelError::InvalidMaterial(format!("Poisson ratio must lie in [0, 0.5), got {nu}")));
        }
        if let MaterialMode::KirchhoffPlate { thickness } = mode {
            if !(thickness > 0.0) {
                return Err(ModelError::InvalidMaterial("plate thickness must be positive".into()));
            }
        }
        Ok(Self { e, nu, mode })
    }

    pub fn plane_stress(e: f64, nu: f64) -> Result<Self, ModelError> {
        Self::new(e, nu, MaterialMode::PlaneStress)
    }

    pub fn plane_strain(e: f64, nu: f64) -> Result<Self, ModelError> {
        Self::new(e, nu, MaterialMode::PlaneStrain)
    }

    pub fn plate(e: f64, nu: f64, thickness: f64) -> Result<Self, ModelError> {
        Self::new(e, nu, MaterialMode::KirchhoffPlate { thickness })
    }

    pub fn rod(e: f64) -> Result<Self, ModelError> {
        Self::new(e, 0.0, MaterialMode::Rod)
    }

    pub fn with_modulus(&self, e: f64) -> Self {
        Self { e, ..*self }
    }

    /// Hooke matrix acting on `(e_xx, e_yy, 2 e_xy)`.
    pub fn elasticity_matrix(&self) -> [[f64; 3]; 3] {
        let (e, nu) = (self.e, self.nu);
        match self.mode {
            MaterialMode::PlaneStrain => {
                let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
                [
                    [c * (1.0 - nu), c * nu, 0.0],
                    [c * nu, c * (1.0 - nu), 0.0],
                    [0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0],
                ]
            }
            _ => {
                let c = e / (1.0 - nu * nu);
                [[c, c * nu, 0.0], [c * nu, c, 0.0], [0.0, 0.0, c * (1.0 - nu) / 2.0]]
            }
        }
    }

    /// `D = E t^3 / (12 (1 - nu^2))`; zero for non-plate modes.
    pub fn flexural_rigidity(&self) -> f64 {
        match self.mode {
            MaterialMode::KirchhoffPlate { thickness } => {
                self.e * thickness.powi(3) / (12.0 * (1.0 - self.nu * self.nu))
            }
            _ => 0.0,
        }
    }

    /// Bending matrix acting on curvatures `(w_xx, w_yy, 2 w_xy)`.
    pub fn bending_matrix(&self) -> [[f64; 3]; 3] {
        let d = self.flexural_rigidity();
        let nu = self.nu;
        [[d, d * nu, 0.0], [d * nu, d, 0.0], [0.0, 0.0, d * (1.0 - nu) / 2.0]]
    }

    /// Stress `(s_xx, s_yy, s_xy)` from a displacement gradient `grad[i][j] = du_i/dx_j`.
    pub fn stress(&self, grad: [[f64; 2]; 2]) -> [f64; 3] {
        let c = self.elasticity_matrix();
        let eps = [grad[0][0], grad[1][1], grad[0][1] + grad[1][0]];
        let mut s = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i] += c[i][j] * eps[j];
            }
        }
        s
    }

    /// Moment tensor `M = -C : H` as `(M_xx, M_yy, M_xy)` from a Hessian `(w_xx, w_xy, w_yy)`.
    pub fn moments(&self, hess: [f64; 3]) -> [f64; 3] {
        let d = self.flexural_rigidity();
        let nu = self.nu;
        let lap = hess[0] + hess[2];
        [
            -d * ((1.0 - nu) * hess[0] + nu * lap),
            -d * ((1.0 - nu) * hess[2] + nu * lap),
            -d * (1.0 - nu) * hess[1],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniaxial_block_stress() {
        let m = Material::plane_stress(1000.0, 0.3).unwrap();
        let s = m.stress([[0.03, 0.0], [0.0, -0.1]]);
        assert!(s[0].abs() < 1e-12);
        assert!((s[1] + 100.0).abs() < 1e-12);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn rigidity() {
        let m = Material::plate(1e7, 0.3, 0.01).unwrap();
        assert!((m.flexural_rigidity() - 1e7 * 1e-6 / (12.0 * 0.91)).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(Material::plane_stress(-1.0, 0.3).is_err());
        assert!(Material::plane_stress(1.0, 0.5).is_err());
        assert!(Material::plate(1.0, 0.3, 0.0).is_err());
    }

    #[test]
    fn plane_strain_reduces_to_lame() {
        let (e, nu) = (7000.0, 0.3);
        let m = Material::plane_strain(e, nu).unwrap();
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let c = m.elasticity_matrix();
        assert!((c[0][0] - (lambda + 2.0 * mu)).abs() < 1e-9);
        assert!((c[0][1] - lambda).abs() < 1e-9);
        assert!((c[2][2] - mu).abs() < 1e-9);
    }
}
