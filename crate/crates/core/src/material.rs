//! Isotropic linear elasticity in plane strain and antiplane shear.
//!
//! Cell gradients, strains and stresses are stored as 2×2 matrices. In
//! antiplane mode only row 0 is used: the gradient row is `∇u`, the "strain"
//! is the same row and the stress is the flux `μ∇u`, so that `½ Σ:ε` is the
//! strain-energy density in both modes.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    PlaneStrain,
    Antiplane,
}

impl Mode {
    /// Displacement components per cell.
    pub fn components(self) -> usize {
        match self {
            Mode::PlaneStrain => 2,
            Mode::Antiplane => 1,
        }
    }

    /// Number of independent gradient entries (`d × 2`).
    pub fn gradient_len(self) -> usize {
        2 * self.components()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("Young modulus must be positive, got {0}")]
    Young(f64),
    #[error("Poisson ratio must lie in (-1, 0.5), got {0}")]
    Poisson(f64),
    #[error("shear modulus must be positive, got {0}")]
    Shear(f64),
    #[error("critical energy release rate must be positive, got {0}")]
    Toughness(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Critical energy release rate `G_c`; may be `+∞` to disable cracking.
    pub toughness: f64,
    pub mode: Mode,
}

impl Material {
    pub fn from_young_poisson(young: f64, poisson: f64, toughness: f64, mode: Mode) -> Result<Self, MaterialError> {
        if !(young > 0.0 && young.is_finite()) {
            return Err(MaterialError::Young(young));
        }
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(MaterialError::Poisson(poisson));
        }
        if !(toughness > 0.0) {
            return Err(MaterialError::Toughness(toughness));
        }
        let mu = young / (2.0 * (1.0 + poisson));
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        Ok(Material { young, poisson, lambda, mu, toughness, mode })
    }

    /// Antiplane material given directly by its shear modulus.
    pub fn antiplane(mu: f64, toughness: f64) -> Result<Self, MaterialError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(MaterialError::Shear(mu));
        }
        if !(toughness > 0.0) {
            return Err(MaterialError::Toughness(toughness));
        }
        Ok(Material { young: 2.0 * mu, poisson: 0.0, lambda: 0.0, mu, toughness, mode: Mode::Antiplane })
    }

    pub fn components(&self) -> usize {
        self.mode.components()
    }

    pub fn strain(&self, gradient: &Matrix2<f64>) -> Matrix2<f64> {
        match self.mode {
            Mode::PlaneStrain => (gradient + gradient.transpose()) * 0.5,
            Mode::Antiplane => Matrix2::new(gradient[(0, 0)], gradient[(0, 1)], 0.0, 0.0),
        }
    }

    /// `C : ε` (plane strain) or `μ ε` (antiplane row).
    pub fn stress(&self, strain: &Matrix2<f64>) -> Matrix2<f64> {
        match self.mode {
            Mode::PlaneStrain => Matrix2::identity() * (self.lambda * strain.trace()) + strain * (2.0 * self.mu),
            Mode::Antiplane => strain * self.mu,
        }
    }

    pub fn strain_stress(&self, gradient: &Matrix2<f64>) -> (Matrix2<f64>, Matrix2<f64>) {
        let eps = self.strain(gradient);
        (eps, self.stress(&eps))
    }

    /// Traction `Σ·n`; in antiplane mode the scalar flux sits in component 0.
    pub fn traction(&self, stress: &Matrix2<f64>, n: &Vector2<f64>) -> Vector2<f64> {
        match self.mode {
            Mode::PlaneStrain => stress * n,
            Mode::Antiplane => Vector2::new(stress[(0, 0)] * n.x + stress[(0, 1)] * n.y, 0.0),
        }
    }

    /// Symmetric matrix `D` with `ε:C:ε = gᵀ D g`, where `g` lists the
    /// gradient entries row by row (`g_00, g_01, g_10, g_11`, or `g_00, g_01`
    /// in antiplane mode). Only the leading `gradient_len` block is used.
    pub fn gradient_form(&self) -> [[f64; 4]; 4] {
        let mut d = [[0.0; 4]; 4];
        match self.mode {
            Mode::PlaneStrain => {
                let (l, m) = (self.lambda, self.mu);
                for i in [0, 3] {
                    for j in [0, 3] {
                        d[i][j] += l;
                    }
                    d[i][i] += 2.0 * m;
                }
                for i in [1, 2] {
                    for j in [1, 2] {
                        d[i][j] += m;
                    }
                }
            }
            Mode::Antiplane => {
                d[0][0] = self.mu;
                d[1][1] = self.mu;
            }
        }
        d
    }
}

/// `½ Σ : ε`.
pub fn energy_density(stress: &Matrix2<f64>, strain: &Matrix2<f64>) -> f64 {
    0.5 * stress.component_mul(strain).sum()
}
