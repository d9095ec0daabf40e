use super::{Singularity, VectorField};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Built-in S²-valued maps on the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapDescriptor {
    /// `u(x) = R (x − center)/|x − center|` with `R` the diagonal reflection
    /// flipping the coordinates marked in `reflect`.
    Hedgehog {
        center: Vec3,
        #[serde(default)]
        reflect: [bool; 3],
    },
    /// A constant unit vector.
    Constant { value: Vec3 },
}

impl MapDescriptor {
    fn signs(reflect: [bool; 3]) -> Vec3 {
        Vec3::from(reflect.map(|r| if r { -1.0 } else { 1.0 }))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MapDescriptor::Hedgehog { center, .. } => {
                if !center.is_finite() || center.norm() >= 1.0 {
                    return Err(Error::invalid("hedgehog center must lie inside the unit ball"));
                }
            }
            MapDescriptor::Constant { value } => {
                if !((value.norm() - 1.0).abs() < 1e-9) {
                    return Err(Error::invalid("constant map must take a unit value"));
                }
            }
        }
        Ok(())
    }

    /// Evaluates `u(x)`.
    pub fn value(&self, x: Vec3) -> Result<Vec3> {
        match *self {
            MapDescriptor::Hedgehog { center, reflect } => {
                let r = x - center;
                let rho = r.norm();
                if rho == 0.0 {
                    return Err(Error::Singular(center));
                }
                let s = Self::signs(reflect);
                Ok(Vec3::new(s.x * r.x, s.y * r.y, s.z * r.z) * (1.0 / rho))
            }
            MapDescriptor::Constant { value } => Ok(value),
        }
    }

    /// Closed-form partials `[∂₁u, ∂₂u, ∂₃u]`.
    fn exact_partials(&self, x: Vec3) -> Result<[Vec3; 3]> {
        match *self {
            MapDescriptor::Hedgehog { center, reflect } => {
                let r = x - center;
                let rho = r.norm();
                if rho == 0.0 {
                    return Err(Error::Singular(center));
                }
                let n = r * (1.0 / rho);
                let s = Self::signs(reflect);
                Ok([0, 1, 2].map(|i| {
                    let dn = (Vec3::axis(i) - n * n[i]) * (1.0 / rho);
                    Vec3::new(s.x * dn.x, s.y * dn.y, s.z * dn.z)
                }))
            }
            MapDescriptor::Constant { .. } => Ok([Vec3::ZERO; 3]),
        }
    }

    fn degree(&self) -> Option<(Vec3, i64)> {
        match *self {
            MapDescriptor::Hedgehog { center, reflect } => {
                let flips = reflect.iter().filter(|&&r| r).count();
                Some((center, if flips % 2 == 0 { 1 } else { -1 }))
            }
            MapDescriptor::Constant { .. } => None,
        }
    }
}

/// How the partial derivatives of `u` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Partials {
    #[default]
    Exact,
    /// Central differences with the given step.
    FiniteDifference { step: f64 },
}

/// The D-field `D(u) = (u·∂₂u×∂₃u, u·∂₃u×∂₁u, u·∂₁u×∂₂u)` of an S²-valued map.
///
/// The hedgehog's D-field has flux `4π` through cubes around its center.
/// With `normalize` the field is divided by `4π` and the flux unit is 1;
/// otherwise the flux unit is `4π`.
#[derive(Debug, Clone, PartialEq)]
pub struct DField {
    map: MapDescriptor,
    normalize: bool,
    partials: Partials,
}

/// Builds the D-field of `map`.
pub fn d_field(map: MapDescriptor, normalize: bool) -> Result<DField> {
    DField::new(map, normalize, Partials::Exact)
}

impl DField {
    pub fn new(map: MapDescriptor, normalize: bool, partials: Partials) -> Result<Self> {
        map.validate()?;
        if let Partials::FiniteDifference { step } = partials {
            if !(step > 0.0 && step < 0.1) {
                return Err(Error::invalid("finite-difference step must lie in (0, 0.1)"));
            }
        }
        Ok(DField {
            map,
            normalize,
            partials,
        })
    }

    pub fn map(&self) -> MapDescriptor {
        self.map
    }

    pub fn normalized(&self) -> bool {
        self.normalize
    }

    pub fn partials(&self) -> Partials {
        self.partials
    }

    fn partials_at(&self, x: Vec3) -> Result<[Vec3; 3]> {
        match self.partials {
            Partials::Exact => self.map.exact_partials(x),
            Partials::FiniteDifference { step } => {
                let mut out = [Vec3::ZERO; 3];
                for (i, d) in out.iter_mut().enumerate() {
                    let e = Vec3::axis(i) * step;
                    *d = (self.map.value(x + e)? - self.map.value(x - e)?) * (0.5 / step);
                }
                Ok(out)
            }
        }
    }
}

impl VectorField for DField {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        let u = self.map.value(x)?;
        let [d1, d2, d3] = self.partials_at(x)?;
        let v = Vec3::new(u.dot(d2.cross(d3)), u.dot(d3.cross(d1)), u.dot(d1.cross(d2)));
        Ok(if self.normalize { v * (1.0 / (4.0 * PI)) } else { v })
    }

    fn flux_unit(&self) -> f64 {
        if self.normalize {
            1.0
        } else {
            4.0 * PI
        }
    }

    fn singularities(&self) -> Vec<Singularity> {
        self.map
            .degree()
            .map(|(p, d)| vec![Singularity::new(p, d)])
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hedgehog_matches_coulomb_kernel() {
        let center = Vec3::new(0.1, -0.05, 0.2);
        let f = d_field(
            MapDescriptor::Hedgehog {
                center,
                reflect: [false; 3],
            },
            false,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = Vec3::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            );
            let r = x - center;
            let expect = r * (1.0 / r.norm().powi(3));
            let got = f.eval(x).unwrap();
            assert!((got - expect).norm() / expect.norm() < 1e-6);
        }
    }

    #[test]
    fn reflection_flips_sign() {
        let center = Vec3::ZERO;
        let plain = d_field(MapDescriptor::Hedgehog { center, reflect: [false; 3] }, true).unwrap();
        let flipped =
            d_field(MapDescriptor::Hedgehog { center, reflect: [true, false, false] }, true).unwrap();
        let x = Vec3::new(0.3, 0.1, -0.2);
        let a = plain.eval(x).unwrap();
        let b = flipped.eval(x).unwrap();
        assert!((a + b).norm() < 1e-14);
        assert_eq!(flipped.singularities()[0].degree, -1);
    }

    #[test]
    fn constant_map_gives_zero_field() {
        let f = d_field(MapDescriptor::Constant { value: Vec3::axis(2) }, true).unwrap();
        assert_eq!(f.eval(Vec3::new(0.2, 0.3, 0.1)).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn finite_difference_partials_agree() {
        let map = MapDescriptor::Hedgehog { center: Vec3::ZERO, reflect: [false; 3] };
        let exact = DField::new(map, true, Partials::Exact).unwrap();
        let fd = DField::new(map, true, Partials::FiniteDifference { step: 1e-4 }).unwrap();
        let x = Vec3::new(0.3, 0.2, -0.1);
        let a = exact.eval(x).unwrap();
        let b = fd.eval(x).unwrap();
        assert!((a - b).norm() / a.norm() < 1e-6);
    }

    #[test]
    fn non_unit_constant_rejected() {
        assert!(d_field(MapDescriptor::Constant { value: Vec3::new(0.0, 0.0, 2.0) }, true).is_err());
    }
}
