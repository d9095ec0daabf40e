//! Face-flux (staggered, lowest-order Raviart–Thomas) grids.

use crate::error::{Error, Result};
use crate::field::Lattice;
use crate::geometry::{Aabb, Vec3};

/// Fluxes through the faces of a uniform grid of cubic cells.
///
/// `flux[a]` holds the faces normal to axis `a`, oriented along `+e_a`; it has
/// `n[a] + 1` entries along `a` and `n[b]` along the other axes. Inside a cell
/// the field is the Raviart–Thomas interpolant: component `a` varies linearly
/// between the two `a`-faces and is constant across them.
#[derive(Debug, Clone, PartialEq)]
pub struct MacGrid {
    pub origin: Vec3,
    pub h: f64,
    pub n: [usize; 3],
    pub flux: [Vec<f64>; 3],
}

impl MacGrid {
    pub fn zeros(origin: Vec3, h: f64, n: [usize; 3]) -> Self {
        let flux = [0, 1, 2].map(|a| {
            let mut d = n;
            d[a] += 1;
            vec![0.0; d[0] * d[1] * d[2]]
        });
        MacGrid { origin, h, n, flux }
    }

    pub fn face_dims(&self, a: usize) -> [usize; 3] {
        let mut d = self.n;
        d[a] += 1;
        d
    }

    #[inline]
    pub fn index(&self, a: usize, p: [usize; 3]) -> usize {
        let d = self.face_dims(a);
        p[0] + d[0] * (p[1] + d[1] * p[2])
    }

    #[inline]
    pub fn get(&self, a: usize, p: [usize; 3]) -> f64 {
        self.flux[a][self.index(a, p)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, p: [usize; 3], v: f64) {
        let i = self.index(a, p);
        self.flux[a][i] = v;
    }

    /// Net outward flux of cell `c`.
    pub fn divergence(&self, c: [usize; 3]) -> f64 {
        (0..3)
            .map(|a| {
                let mut up = c;
                up[a] += 1;
                self.get(a, up) - self.get(a, c)
            })
            .sum()
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vec3::new(self.n[0] as f64, self.n[1] as f64, self.n[2] as f64) * self.h;
        Aabb::new(self.origin, self.origin + ext)
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            origin: self.origin,
            spacing: self.h,
        }
    }

    pub fn cell_center(&self, c: [usize; 3]) -> Vec3 {
        self.origin + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.h
    }

    /// Raviart–Thomas interpolant at `x`.
    pub fn eval(&self, x: Vec3) -> Result<Vec3> {
        let mut cell = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let u = (x[a] - self.origin[a]) / self.h;
            let top = self.n[a] as f64;
            if !(u >= -1e-9 && u <= top + 1e-9) {
                return Err(Error::OutOfRange(x));
            }
            let u = u.clamp(0.0, top);
            let i = (u.floor() as usize).min(self.n[a] - 1);
            cell[a] = i;
            t[a] = u - i as f64;
        }
        let h2 = self.h * self.h;
        let mut v = Vec3::ZERO;
        for a in 0..3 {
            let lo = self.get(a, cell);
            let mut up = cell;
            up[a] += 1;
            let hi = self.get(a, up);
            v[a] = ((1.0 - t[a]) * lo + t[a] * hi) / h2;
        }
        Ok(v)
    }

    /// Field value at node `p` averaged from the four adjacent faces of each axis.
    pub fn node_value(&self, p: [usize; 3]) -> Vec3 {
        let h2 = self.h * self.h;
        let mut v = Vec3::ZERO;
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let mut s = 0.0;
            let mut cnt = 0.0;
            for db in [0usize, 1] {
                for dc in [0usize, 1] {
                    if p[b] < db || p[c] < dc || p[b] - db >= self.n[b] || p[c] - dc >= self.n[c] {
                        continue;
                    }
                    let mut q = p;
                    q[b] -= db;
                    q[c] -= dc;
                    s += self.get(a, q);
                    cnt += 1.0;
                }
            }
            v[a] = if cnt > 0.0 { s / (cnt * h2) } else { 0.0 };
        }
        v
    }

    /// Cell-centre value: the mean of the two opposite face fluxes per axis.
    pub fn cell_value(&self, c: [usize; 3]) -> Vec3 {
        let h2 = self.h * self.h;
        let mut v = Vec3::ZERO;
        for a in 0..3 {
            let mut up = c;
            up[a] += 1;
            v[a] = 0.5 * (self.get(a, c) + self.get(a, up)) / h2;
        }
        v
    }

    /// `(Σ_cells |X(centre)|^p h³)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..self.n[2] {
            for j in 0..self.n[1] {
                for i in 0..self.n[0] {
                    s += self.cell_value([i, j, k]).norm().powf(p);
                }
            }
        }
        (s * self.h.powi(3)).powf(1.0 / p)
    }

    /// Discrete convolution of all three face arrays with the kernel
    /// `(1 − |d|²/R²)³`, `|d| < R`, normalized to unit mass. Faces outside the
    /// grid count as zero. The result has the same cell divergences convolved
    /// with the same kernel.
    pub fn convolve(&self, radius: f64) -> MacGrid {
        let r = (radius / self.h).floor() as i64;
        if r < 1 {
            return self.clone();
        }
        let mut stencil = Vec::new();
        for dk in -r..=r {
            for dj in -r..=r {
                for di in -r..=r {
                    let d2 = ((di * di + dj * dj + dk * dk) as f64) * self.h * self.h;
                    let q = 1.0 - d2 / (radius * radius);
                    if q > 0.0 {
                        stencil.push(([di, dj, dk], q * q * q));
                    }
                }
            }
        }
        let mass: f64 = stencil.iter().map(|s| s.1).sum();
        stencil.iter_mut().for_each(|s| s.1 /= mass);
        let mut out = self.clone();
        for a in 0..3 {
            let d = self.face_dims(a);
            let src = &self.flux[a];
            let dst: Vec<f64> = {
                use rayon::prelude::*;
                (0..src.len())
                    .into_par_iter()
                    .map(|idx| {
                        let p = [
                            (idx % d[0]) as i64,
                            ((idx / d[0]) % d[1]) as i64,
                            (idx / (d[0] * d[1])) as i64,
                        ];
                        let mut s = 0.0;
                        for (off, w) in &stencil {
                            let q = [p[0] + off[0], p[1] + off[1], p[2] + off[2]];
                            if (0..3).all(|i| q[i] >= 0 && (q[i] as usize) < d[i]) {
                                let qi = q[0] as usize
                                    + d[0] * (q[1] as usize + d[1] * q[2] as usize);
                                s += w * src[qi];
                            }
                        }
                        s
                    })
                    .collect()
            };
            out.flux[a] = dst;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_div_free(n: usize, seed: u64) -> MacGrid {
        // curl of a random edge potential is divergence free cell by cell
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = n + 1;
        let pot: Vec<[f64; 3]> = (0..m * m * m)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let at = |i: usize, j: usize, k: usize, c: usize| pot[i + m * (j + m * k)][c];
        let mut g = MacGrid::zeros(Vec3::ZERO, 0.1, [n, n, n]);
        for k in 0..n {
            for j in 0..n {
                for i in 0..=n {
                    // flux through x-face = circulation of (Ay, Az) around it
                    let v = at(i, j + 1, k, 2) - at(i, j, k, 2) - at(i, j, k + 1, 1) + at(i, j, k, 1);
                    g.set(0, [i, j, k], v);
                }
            }
        }
        for k in 0..n {
            for j in 0..=n {
                for i in 0..n {
                    let v = at(i, j, k + 1, 0) - at(i, j, k, 0) - at(i + 1, j, k, 2) + at(i, j, k, 2);
                    g.set(1, [i, j, k], v);
                }
            }
        }
        for k in 0..=n {
            for j in 0..n {
                for i in 0..n {
                    let v = at(i + 1, j, k, 1) - at(i, j, k, 1) - at(i, j + 1, k, 0) + at(i, j, k, 0);
                    g.set(2, [i, j, k], v);
                }
            }
        }
        g
    }

    #[test]
    fn discrete_curl_is_divergence_free() {
        let g = random_div_free(5, 3);
        for k in 0..5 {
            for j in 0..5 {
                for i in 0..5 {
                    assert!(g.divergence([i, j, k]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn convolution_commutes_with_divergence() {
        let g = random_div_free(9, 4);
        let s = g.convolve(0.25);
        assert_ne!(s, g);
        // away from the grid edge the smoothed field stays divergence free
        for k in 3..6 {
            for j in 3..6 {
                for i in 3..6 {
                    assert!(s.divergence([i, j, k]).abs() < 1e-13);
                }
            }
        }
        assert_eq!(g.convolve(0.05), g);
    }

    #[test]
    fn rt_interpolant_is_linear_in_normal_direction() {
        let mut g = MacGrid::zeros(Vec3::ZERO, 0.5, [2, 1, 1]);
        g.set(0, [0, 0, 0], 0.0);
        g.set(0, [1, 0, 0], 0.25);
        g.set(0, [2, 0, 0], 0.5);
        let v = g.eval(Vec3::new(0.25, 0.1, 0.4)).unwrap();
        assert!((v.x - 0.5).abs() < 1e-15);
        assert!(g.eval(Vec3::new(1.2, 0.0, 0.0)).is_err());
    }
}
