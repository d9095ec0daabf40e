use super::mac::MacGrid;
use super::surface::Boundary1Form;
use super::CubeFaceData;
use crate::error::{Error, Result};
use crate::field::{Lattice, Singularity, VectorField};
use crate::geometry::{Aabb, Cube, Vec3};
use crate::solver::{conjugate_gradient, CgStats};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKind {
    Harmonic,
    Radial,
}

/// Boundary condition on the component of `A` normal to a face.
#[derive(Clone, Copy, Default)]
pub enum NormalCondition<'a> {
    /// Zero normal derivative. With co-closed tangential data this makes
    /// `d*A` vanish on the boundary.
    #[default]
    Neumann,
    /// Prescribed values; zero when absent.
    Dirichlet(Option<&'a (dyn Fn(Vec3) -> Vec3 + Sync)>),
}

/// Solver settings for [`harmonic_extend_with`].
#[derive(Clone, Copy)]
pub struct HarmonicOptions<'a> {
    pub solver_tol: f64,
    pub normal: NormalCondition<'a>,
}

impl Default for HarmonicOptions<'_> {
    fn default() -> Self {
        HarmonicOptions {
            solver_tol: 1e-10,
            normal: NormalCondition::Neumann,
        }
    }
}

/// The field inside one cube, either `curl A` for a harmonic `A` or the
/// radial pullback of the boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeExtension {
    pub cube: Cube,
    pub kind: ExtensionKind,
    /// Cells per cube edge.
    pub n: usize,
    /// Face fluxes on the `n³` cell grid of the cube.
    pub grid: MacGrid,
    /// Edge values of `A` (harmonic only): component `d` lives on the
    /// `d`-edges, `n` along `d` and `n + 1` along the other axes.
    pub potential: Option<[Vec<f64>; 3]>,
    /// Range of the Dirichlet data of each component (harmonic only).
    pub data_range: Option<[(f64, f64); 3]>,
    pub solver: Option<[CgStats; 3]>,
    /// Boundary data and degree (radial only).
    pub boundary: Option<CubeFaceData>,
    pub degree: i64,
}

fn edge_dims(n: usize, d: usize) -> [usize; 3] {
    let mut dims = [n + 1; 3];
    dims[d] = n;
    dims
}

#[inline]
fn flat(dims: [usize; 3], p: [usize; 3]) -> usize {
    p[0] + dims[0] * (p[1] + dims[1] * p[2])
}

/// Harmonic extension with a Neumann condition on the normal component.
pub fn harmonic_extend(alpha: &Boundary1Form, cube: &Cube, m: usize) -> Result<CubeExtension> {
    harmonic_extend_with(alpha, cube, m, &HarmonicOptions::default())
}

/// Componentwise discrete harmonic extension of the tangential data `alpha`
/// on the staggered edge grid of a cube with `m` nodes per axis.
pub fn harmonic_extend_with(
    alpha: &Boundary1Form,
    cube: &Cube,
    m: usize,
    opts: &HarmonicOptions,
) -> Result<CubeExtension> {
    if m < 5 {
        return Err(Error::invalid(format!("m = {m} must be at least 5")));
    }
    let n = m - 1;
    if alpha.mesh.n != n {
        return Err(Error::invalid(format!(
            "boundary form has {} cells per edge, grid needs {n}",
            alpha.mesh.n
        )));
    }
    let h = cube.side / n as f64;
    let corner = cube.center - Vec3::splat(cube.half());
    let mut comps: [Vec<f64>; 3] = Default::default();
    let mut stats = [CgStats {
        iterations: 0,
        relative_residual: 0.0,
    }; 3];
    let mut ranges = [(0.0, 0.0); 3];
    for d in 0..3 {
        let dims = edge_dims(n, d);
        let mut full = vec![0.0; dims[0] * dims[1] * dims[2]];
        let mut unknown_of = vec![usize::MAX; full.len()];
        let mut unknowns = Vec::new();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = [i, j, k];
                    let interior = (0..3).all(|e| e == d || (p[e] >= 1 && p[e] < n));
                    if interior {
                        unknown_of[flat(dims, p)] = unknowns.len();
                        unknowns.push(p);
                    } else {
                        let e = alpha
                            .mesh
                            .edge_index(p, d)
                            .expect("boundary edge missing from surface mesh");
                        let v = alpha.values[e] / h;
                        full[flat(dims, p)] = v;
                        lo = f64::min(lo, v);
                        hi = f64::max(hi, v);
                    }
                }
            }
        }
        // ghost across a face normal to d: Neumann mirrors, Dirichlet reflects about the value
        let ghost = |p: [usize; 3], upper: bool| -> Option<f64> {
            match opts.normal {
                NormalCondition::Neumann => None,
                NormalCondition::Dirichlet(f) => Some(f.map_or(0.0, |f| {
                    f(face_point(corner, h, n, d, p, upper))[d]
                })),
            }
        };
        let mut rhs = vec![0.0; unknowns.len()];
        let mut diag = vec![6.0; unknowns.len()];
        for (u, &p) in unknowns.iter().enumerate() {
            for e in 0..3 {
                for up in [false, true] {
                    let mut q = p;
                    if e == d {
                        if (!up && p[d] == 0) || (up && p[d] == n - 1) {
                            match ghost(p, up) {
                                None => diag[u] -= 1.0,
                                Some(nv) => {
                                    lo = lo.min(nv);
                                    hi = hi.max(nv);
                                    diag[u] += 1.0;
                                    rhs[u] += 2.0 * nv;
                                }
                            }
                            continue;
                        }
                    }
                    if up {
                        q[e] += 1;
                    } else {
                        q[e] -= 1;
                    }
                    let qi = flat(dims, q);
                    if unknown_of[qi] == usize::MAX {
                        rhs[u] += full[qi];
                    }
                }
            }
        }
        let neighbors: Vec<Vec<usize>> = unknowns
            .iter()
            .map(|&p| {
                let mut v = Vec::with_capacity(6);
                for e in 0..3 {
                    if p[e] > 0 {
                        let mut q = p;
                        q[e] -= 1;
                        let qi = unknown_of[flat(dims, q)];
                        if qi != usize::MAX {
                            v.push(qi);
                        }
                    }
                    let lim = if e == d { n - 1 } else { n };
                    if p[e] < lim {
                        let mut q = p;
                        q[e] += 1;
                        let qi = unknown_of[flat(dims, q)];
                        if qi != usize::MAX {
                            v.push(qi);
                        }
                    }
                }
                v
            })
            .collect();
        let mut x = vec![0.0; unknowns.len()];
        stats[d] = conjugate_gradient(
            |x, y| {
                for (i, nb) in neighbors.iter().enumerate() {
                    let mut s = diag[i] * x[i];
                    for &j in nb {
                        s -= x[j];
                    }
                    y[i] = s;
                }
            },
            &rhs,
            &mut x,
            opts.solver_tol,
            20 * unknowns.len() + 100,
            false,
        )?;
        for (u, &p) in unknowns.iter().enumerate() {
            full[flat(dims, p)] = x[u];
        }
        comps[d] = full;
        ranges[d] = (lo, hi);
    }
    let grid = curl_grid(&comps, corner, h, n);
    Ok(CubeExtension {
        cube: *cube,
        kind: ExtensionKind::Harmonic,
        n,
        grid,
        potential: Some(comps),
        data_range: Some(ranges),
        solver: Some(stats),
        boundary: None,
        degree: 0,
    })
}

/// Point of the face normal to `d` crossed by the `d`-edge line through `p`.
fn face_point(corner: Vec3, h: f64, n: usize, d: usize, p: [usize; 3], upper: bool) -> Vec3 {
    let mut x = corner;
    for a in 0..3 {
        x[a] += h * if a == d {
            if upper {
                n as f64
            } else {
                0.0
            }
        } else {
            p[a] as f64
        };
    }
    x
}

/// Face circulations of the edge potential.
fn curl_grid(a: &[Vec<f64>; 3], corner: Vec3, h: f64, n: usize) -> MacGrid {
    let dims: [[usize; 3]; 3] = std::array::from_fn(|d| edge_dims(n, d));
    let av = |d: usize, p: [usize; 3]| a[d][flat(dims[d], p)];
    let mut g = MacGrid::zeros(corner, h, [n, n, n]);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let fd = g.face_dims(axis);
        for k in 0..fd[2] {
            for j in 0..fd[1] {
                for i in 0..fd[0] {
                    let p = [i, j, k];
                    let mut pu = p;
                    pu[u] += 1;
                    let mut pv = p;
                    pv[v] += 1;
                    // counterclockwise about +e_axis: u-edge, v-edge at +u, back along u at +v, down v
                    let circ = av(u, p) + av(v, pu) - av(u, pv) - av(v, p);
                    g.set(axis, p, h * circ);
                }
            }
        }
    }
    g
}

impl CubeExtension {
    /// Largest amount by which an interior potential value leaves the range of its
    /// Dirichlet data (zero when the maximum principle holds).
    pub fn max_principle_violation(&self) -> f64 {
        let (Some(pot), Some(ranges)) = (&self.potential, &self.data_range) else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for d in 0..3 {
            let (lo, hi) = ranges[d];
            for &v in &pot[d] {
                worst = worst.max(lo - v).max(v - hi);
            }
        }
        worst
    }

    /// Largest residual of the 7-point Laplacian at interior edges, ghost
    /// values at the normal faces included.
    pub fn laplace_residual(&self, normal: &NormalCondition) -> f64 {
        let Some(pot) = &self.potential else {
            return 0.0;
        };
        let n = self.n;
        let h = self.grid.h;
        let corner = self.grid.origin;
        let mut worst: f64 = 0.0;
        for d in 0..3 {
            let dims = edge_dims(n, d);
            for k in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        let p = [i, j, k];
                        if !(0..3).all(|e| e == d || (p[e] >= 1 && p[e] < n)) {
                            continue;
                        }
                        let c = pot[d][flat(dims, p)];
                        let mut lap = -6.0 * c;
                        for e in 0..3 {
                            for up in [false, true] {
                                let edge = (!up && p[e] == 0) || (up && p[e] + 1 == dims[e]);
                                if e == d && edge {
                                    lap += match normal {
                                        NormalCondition::Neumann => c,
                                        NormalCondition::Dirichlet(f) => {
                                            let nv = f.map_or(0.0, |f| {
                                                f(face_point(corner, h, n, d, p, up))[d]
                                            });
                                            2.0 * nv - c
                                        }
                                    };
                                    continue;
                                }
                                let mut q = p;
                                if up {
                                    q[e] += 1
                                } else {
                                    q[e] -= 1
                                }
                                lap += pot[d][flat(dims, q)];
                            }
                        }
                        worst = worst.max(lap.abs());
                    }
                }
            }
        }
        worst
    }

    /// Discrete `L^q` norm of the extended field over the cube.
    pub fn field_lq_norm(&self, q: f64) -> f64 {
        self.grid.lp_norm(q)
    }

    /// Edge value of component `d` of the potential at edge index `p`.
    pub fn potential_value(&self, d: usize, p: [usize; 3]) -> Option<f64> {
        self.potential
            .as_ref()
            .map(|a| a[d][flat(edge_dims(self.n, d), p)])
    }
}

impl VectorField for CubeExtension {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        match self.kind {
            ExtensionKind::Harmonic => self.grid.eval(x),
            ExtensionKind::Radial => super::radial::radial_eval(
                self.boundary.as_ref().expect("radial extension keeps its data"),
                x,
            ),
        }
    }

    fn singularities(&self) -> Vec<Singularity> {
        match self.kind {
            ExtensionKind::Radial if self.degree != 0 => {
                vec![Singularity::new(self.cube.center, self.degree)]
            }
            _ => Vec::new(),
        }
    }

    fn piecewise_lattice(&self) -> Option<Lattice> {
        match self.kind {
            ExtensionKind::Harmonic => Some(self.grid.lattice()),
            ExtensionKind::Radial => None,
        }
    }

    fn domain(&self) -> Option<Aabb> {
        Some(self.cube.aabb())
    }
}
