//! Points, vectors and axis-aligned cubes in R³.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// A point or vector in R³. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Vec3::new(v, v, v)
    }

    /// Unit vector along `axis` (0, 1 or 2).
    pub fn axis(axis: usize) -> Self {
        let mut e = Vec3::ZERO;
        e[axis] = 1.0;
        e
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    /// The sup-norm `max |x_i|`.
    pub fn sup_norm(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl std::iter::Sum for Vec3 {
    fn sum<I: Iterator<Item = Vec3>>(iter: I) -> Vec3 {
        iter.fold(Vec3::ZERO, |a, b| a + b)
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Aabb {
    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        Aabb { lo, hi }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(other.lo) && self.contains(other.hi)
    }

    /// Euclidean distance from `p` to the box boundary (zero on the boundary).
    pub fn boundary_distance(&self, p: Vec3) -> f64 {
        if (0..3).all(|i| p[i] > self.lo[i] && p[i] < self.hi[i]) {
            (0..3)
                .map(|i| (p[i] - self.lo[i]).min(self.hi[i] - p[i]))
                .fold(f64::INFINITY, f64::min)
        } else {
            let mut d2 = 0.0;
            for i in 0..3 {
                let d = if p[i] < self.lo[i] {
                    self.lo[i] - p[i]
                } else if p[i] > self.hi[i] {
                    p[i] - self.hi[i]
                } else {
                    0.0
                };
                d2 += d * d;
            }
            d2.sqrt()
        }
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|i| self.hi[i] - self.lo[i]).product()
    }
}

/// The cube `C_r(x₀) = r·[-½, ½]³ + x₀` of side `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec3,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec3, side: f64) -> Self {
        Cube { center, side }
    }

    pub fn half(&self) -> f64 {
        0.5 * self.side
    }

    pub fn aabb(&self) -> Aabb {
        let h = Vec3::splat(self.half());
        Aabb::new(self.center - h, self.center + h)
    }

    /// True when `p` lies in the open cube.
    pub fn contains_open(&self, p: Vec3) -> bool {
        (p - self.center).sup_norm() < self.half()
    }

    /// Closure of the cube contained in the open unit ball.
    pub fn inside_unit_ball(&self) -> bool {
        self.center.norm() + self.side * 3f64.sqrt() / 2.0 < 1.0
    }

    pub fn boundary_distance(&self, p: Vec3) -> f64 {
        self.aabb().boundary_distance(p)
    }
}

/// Largest admissible cube side at `center`: the closed cube stays inside the unit ball.
pub fn max_admissible_side(center: Vec3) -> f64 {
    (2.0 / 3f64.sqrt()) * (1.0 - center.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_follows_right_hand_rule() {
        assert_eq!(Vec3::axis(0).cross(Vec3::axis(1)), Vec3::axis(2));
        assert_eq!(Vec3::axis(1).cross(Vec3::axis(2)), Vec3::axis(0));
    }

    #[test]
    fn boundary_distance_inside_and_outside() {
        let c = Cube::new(Vec3::ZERO, 1.0);
        assert!((c.boundary_distance(Vec3::ZERO) - 0.5).abs() < 1e-15);
        assert!((c.boundary_distance(Vec3::new(1.5, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!(
            (c.boundary_distance(Vec3::new(1.5, 1.5, 0.0)) - 2f64.sqrt()).abs() < 1e-15
        );
        assert_eq!(c.boundary_distance(Vec3::new(0.5, 0.1, 0.0)), 0.0);
    }

    #[test]
    fn serde_as_array() {
        let v = Vec3::new(1.0, -2.0, 0.5);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[1.0,-2.0,0.5]");
        let back: Vec3 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
