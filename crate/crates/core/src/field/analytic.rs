use super::{FieldConvention, Singularity, VectorField};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Smooth part added to a superposition of point charges.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Background {
    #[default]
    None,
    Constant { value: Vec3 },
    /// `ω × x`, a rigid rotation: divergence free and curl `2ω`.
    Solenoidal { omega: Vec3 },
    /// `s·x`, divergence `3s`. Not an integer-flux field; used as a negative control.
    Linear { scale: f64 },
}

impl Background {
    fn eval(&self, x: Vec3) -> Vec3 {
        match *self {
            Background::None => Vec3::ZERO,
            Background::Constant { value } => value,
            Background::Solenoidal { omega } => omega.cross(x),
            Background::Linear { scale } => x * scale,
        }
    }
}

/// Superposition of Coulomb charges plus a background term.
///
/// `X(x) = flux_unit · Σ_j d_j (x − x_j) / (4π |x − x_j|³) + background(x)`.
/// With `core_radius > 0` each charge is spread uniformly over a ball of that
/// radius, which removes the singularity but keeps the far field.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticField {
    charges: Vec<Singularity>,
    background: Background,
    convention: FieldConvention,
    core_radius: f64,
}

/// Builds the Coulomb superposition of `charges` with unit flux convention.
pub fn coulomb_superposition(charges: &[Singularity]) -> Result<AnalyticField> {
    AnalyticField::new(charges.to_vec(), Background::None)
}

impl AnalyticField {
    pub fn new(charges: Vec<Singularity>, background: Background) -> Result<Self> {
        for c in &charges {
            c.validate()?;
        }
        for (i, a) in charges.iter().enumerate() {
            for b in &charges[i + 1..] {
                if (a.position - b.position).norm() < 1e-12 {
                    return Err(Error::invalid(format!(
                        "coincident charges at {:?}",
                        a.position
                    )));
                }
            }
        }
        Ok(AnalyticField {
            charges,
            background,
            convention: FieldConvention::default(),
            core_radius: 0.0,
        })
    }

    pub fn background_only(background: Background) -> Self {
        AnalyticField {
            charges: Vec::new(),
            background,
            convention: FieldConvention::default(),
            core_radius: 0.0,
        }
    }

    pub fn with_convention(mut self, convention: FieldConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Spreads every charge over a ball of radius `radius`.
    pub fn with_core_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::invalid("core radius must be nonnegative"));
        }
        self.core_radius = radius;
        Ok(self)
    }

    pub fn charges(&self) -> &[Singularity] {
        &self.charges
    }

    pub fn background(&self) -> Background {
        self.background
    }

    pub fn convention(&self) -> FieldConvention {
        self.convention
    }

    pub fn core_radius(&self) -> f64 {
        self.core_radius
    }

    /// Total degree of charges strictly inside the open box around `center` of half-side `half`.
    pub fn enclosed_degree(&self, center: Vec3, half: f64) -> i64 {
        self.charges
            .iter()
            .filter(|c| (c.position - center).sup_norm() < half)
            .map(|c| c.degree)
            .sum()
    }
}

impl VectorField for AnalyticField {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        let mut v = self.background.eval(x);
        let k = self.convention.flux_unit / (4.0 * PI);
        for c in &self.charges {
            let r = x - c.position;
            let d = r.norm();
            let d_f = c.degree as f64;
            if self.core_radius > 0.0 && d < self.core_radius {
                v += r * (k * d_f / self.core_radius.powi(3));
            } else if d == 0.0 {
                return Err(Error::Singular(c.position));
            } else {
                v += r * (k * d_f / (d * d * d));
            }
        }
        Ok(v)
    }

    fn flux_unit(&self) -> f64 {
        self.convention.flux_unit
    }

    fn singularities(&self) -> Vec<Singularity> {
        if self.core_radius > 0.0 {
            Vec::new()
        } else {
            self.charges.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_charge_at_origin() {
        let f = coulomb_superposition(&[Singularity::new(Vec3::ZERO, 1)]).unwrap();
        let v = f.eval(Vec3::new(0.5, 0.0, 0.0)).unwrap();
        assert_relative_eq!(v.x, 1.0 / PI, max_relative = 1e-15);
        assert_eq!(v.y, 0.0);
        assert!(matches!(f.eval(Vec3::ZERO), Err(Error::Singular(_))));
    }

    #[test]
    fn constant_background() {
        let f = AnalyticField::background_only(Background::Constant {
            value: Vec3::new(0.0, 0.0, 1.0),
        });
        assert_eq!(f.eval(Vec3::new(0.3, -0.2, 0.1)).unwrap(), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn coincident_charges_rejected() {
        let p = Vec3::new(0.1, 0.2, 0.0);
        let r = coulomb_superposition(&[Singularity::new(p, 1), Singularity::new(p, -1)]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn empty_superposition_is_zero() {
        let f = coulomb_superposition(&[]).unwrap();
        assert_eq!(f.eval(Vec3::new(0.1, 0.1, 0.1)).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn core_radius_removes_singularity() {
        let f = coulomb_superposition(&[Singularity::new(Vec3::ZERO, 1)])
            .unwrap()
            .with_core_radius(0.05)
            .unwrap();
        assert_eq!(f.eval(Vec3::ZERO).unwrap(), Vec3::ZERO);
        // continuous across the core surface
        let inside = f.eval(Vec3::new(0.05 - 1e-12, 0.0, 0.0)).unwrap();
        let outside = f.eval(Vec3::new(0.05 + 1e-12, 0.0, 0.0)).unwrap();
        assert_relative_eq!(inside.x, outside.x, max_relative = 1e-9);
        assert!(f.singularities().is_empty());
    }
}
