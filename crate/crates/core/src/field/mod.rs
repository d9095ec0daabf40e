//! Vector fields on the unit ball.
//!
//! Every field works in the vector-field picture where the flux through a
//! small cube around a point singularity equals `degree * flux_unit`. The
//! 2-form picture (curvature in `2πZ`) differs only by that constant, which
//! [`FieldConvention`] records; no module below carries a `2π` itself.

mod analytic;
mod dfield;
mod sampled;
mod spec;

pub use analytic::{coulomb_superposition, AnalyticField, Background};
pub use dfield::{d_field, DField, MapDescriptor, Partials};
pub use sampled::{SampledField, SampledHeader};
pub use spec::{load_field, AnyField, FieldSpec};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use serde::{Deserialize, Serialize};

/// A point singularity with integer degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    #[serde(rename = "pos")]
    pub position: Vec3,
    #[serde(rename = "deg")]
    pub degree: i64,
}

impl Singularity {
    pub fn new(position: Vec3, degree: i64) -> Self {
        Singularity { position, degree }
    }

    /// Checks `|position| < 1` and `degree != 0`.
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || self.position.norm() >= 1.0 {
            return Err(Error::invalid(format!(
                "singularity at {:?} is not inside the unit ball",
                self.position
            )));
        }
        if self.degree == 0 {
            return Err(Error::invalid("singularity degree must be nonzero"));
        }
        Ok(())
    }
}

/// Flux value corresponding to degree one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConvention {
    pub flux_unit: f64,
}

impl Default for FieldConvention {
    fn default() -> Self {
        FieldConvention { flux_unit: 1.0 }
    }
}

impl FieldConvention {
    pub fn new(flux_unit: f64) -> Result<Self> {
        if !(flux_unit > 0.0 && flux_unit.is_finite()) {
            return Err(Error::invalid("flux_unit must be positive"));
        }
        Ok(FieldConvention { flux_unit })
    }
}

/// Uniform axis-aligned lattice on which a field is piecewise polynomial.
///
/// Quadrature splits faces along these lattice lines so that the integrand
/// is smooth on every panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub origin: Vec3,
    pub spacing: f64,
}

/// A vector field that can be evaluated on (part of) the unit ball.
pub trait VectorField: Sync {
    fn eval(&self, x: Vec3) -> Result<Vec3>;

    fn flux_unit(&self) -> f64 {
        1.0
    }

    /// Singular points known in closed form; empty when unknown.
    fn singularities(&self) -> Vec<Singularity> {
        Vec::new()
    }

    /// Radius around each known singularity inside which the field is not
    /// resolved (zero for exact point singularities).
    fn singular_radius(&self) -> f64 {
        0.0
    }

    fn piecewise_lattice(&self) -> Option<Lattice> {
        None
    }

    /// Box outside of which the field cannot be evaluated.
    fn domain(&self) -> Option<Aabb> {
        None
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        (**self).eval(x)
    }
    fn flux_unit(&self) -> f64 {
        (**self).flux_unit()
    }
    fn singularities(&self) -> Vec<Singularity> {
        (**self).singularities()
    }
    fn singular_radius(&self) -> f64 {
        (**self).singular_radius()
    }
    fn piecewise_lattice(&self) -> Option<Lattice> {
        (**self).piecewise_lattice()
    }
    fn domain(&self) -> Option<Aabb> {
        (**self).domain()
    }
}

impl<T: VectorField + ?Sized> VectorField for Box<T> {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        (**self).eval(x)
    }
    fn flux_unit(&self) -> f64 {
        (**self).flux_unit()
    }
    fn singularities(&self) -> Vec<Singularity> {
        (**self).singularities()
    }
    fn singular_radius(&self) -> f64 {
        (**self).singular_radius()
    }
    fn piecewise_lattice(&self) -> Option<Lattice> {
        (**self).piecewise_lattice()
    }
    fn domain(&self) -> Option<Aabb> {
        (**self).domain()
    }
}

/// The identically zero field.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn eval(&self, _x: Vec3) -> Result<Vec3> {
        Ok(Vec3::ZERO)
    }
}

/// Adapter turning a closure into a field.
pub struct FnField<F>(pub F);

impl<F: Fn(Vec3) -> Vec3 + Sync> VectorField for FnField<F> {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        Ok((self.0)(x))
    }
}

/// Evaluates `field` at `x`, checking that `x` lies in the closed unit ball.
pub fn eval(field: &dyn VectorField, x: Vec3) -> Result<Vec3> {
    if !x.is_finite() || x.norm() > 1.0 {
        return Err(Error::invalid(format!("{x:?} is outside the unit ball")));
    }
    field.eval(x)
}
