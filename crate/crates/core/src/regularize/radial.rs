use super::harmonic::{CubeExtension, ExtensionKind};
use super::mac::MacGrid;
use super::CubeFaceData;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Pullback of the boundary data under the sup-norm projection onto the cube
/// boundary, evaluated in closed form: `X(u) = ρ(π(u))·s²·u/‖u‖∞³` with
/// `u = x − c`, `s` the half side and `ρ` the outward cell density.
pub(super) fn radial_eval(data: &CubeFaceData, x: Vec3) -> Result<Vec3> {
    let cube = data.cube;
    let s = cube.half();
    let u = x - cube.center;
    let t = u.sup_norm();
    if t > s * (1.0 + 1e-9) {
        return Err(Error::OutOfRange(x));
    }
    if t <= 1e-300 || t < 1e-14 * s {
        return Err(Error::Singular(x));
    }
    let k = (0..3).max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap();
    let face = 2 * k + usize::from(u[k] > 0.0);
    let (a, b) = ((k + 1) % 3, (k + 2) % 3);
    let n = data.n;
    let hf = data.cell_size();
    let cell = |w: f64| (((w * s / t + s) / hf).floor().max(0.0) as usize).min(n - 1);
    let rho = data.faces[face][cell(u[a]) + n * cell(u[b])] / (hf * hf);
    Ok(u * (rho * s * s / (t * t * t)))
}

/// Degree of boundary data, `None` when the total is not within `int_tol` of an
/// integer multiple of `flux_unit`.
fn data_degree(data: &CubeFaceData, flux_unit: f64, int_tol: f64) -> Option<i64> {
    let q = data.total() / flux_unit;
    let r = q.round();
    ((q - r).abs() <= int_tol).then_some(r as i64)
}

fn clip(poly: &[Vec3], keep: impl Fn(Vec3) -> f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (fp, fq) = (keep(p), keep(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

fn clip2(poly: &[[f64; 2]], keep: impl Fn([f64; 2]) -> f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (fp, fq) = (keep(p), keep(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]);
        }
    }
    out
}

fn area(poly: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s.abs()
}

/// Flux of the radial extension of `data` along `+e_axis` through the
/// rectangle `{x[axis] = c}`, `lo ≤ (x[u], x[v]) ≤ hi`, computed exactly by
/// projecting the rectangle onto the cube boundary.
pub fn radial_projection_flux(data: &CubeFaceData, axis: usize, c: f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let center = data.cube.center;
    let s = data.cube.half();
    let w = c - center[axis];
    if w.abs() < 1e-14 * s {
        return 0.0;
    }
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let corner = |a: f64, b: f64| {
        let mut p = Vec3::ZERO;
        p[axis] = w;
        p[u] = a - center[u];
        p[v] = b - center[v];
        p
    };
    let rect = [
        corner(lo[0], lo[1]),
        corner(hi[0], lo[1]),
        corner(hi[0], hi[1]),
        corner(lo[0], hi[1]),
    ];
    let n = data.n;
    let hf = data.cell_size();
    let mut total = 0.0;
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        for sigma in [-1.0f64, 1.0] {
            let mut poly = rect.to_vec();
            for j in [a, b] {
                for tau in [-1.0, 1.0] {
                    poly = clip(&poly, |p| sigma * p[k] + tau * p[j]);
                    if poly.len() < 3 {
                        break;
                    }
                }
            }
            if poly.len() < 3 {
                continue;
            }
            let proj: Vec<[f64; 2]> = poly
                .iter()
                .map(|p| {
                    let f = s / (sigma * p[k]);
                    [p[a] * f + s, p[b] * f + s]
                })
                .collect();
            if area(&proj) == 0.0 {
                continue;
            }
            let face = 2 * k + usize::from(sigma > 0.0);
            let (mut lo_c, mut hi_c) = ([n, n], [0usize, 0]);
            for q in &proj {
                for d in 0..2 {
                    let i = ((q[d] / hf).floor().max(0.0) as usize).min(n - 1);
                    lo_c[d] = lo_c[d].min(i);
                    hi_c[d] = hi_c[d].max(i);
                }
            }
            for cb in lo_c[1]..=hi_c[1] {
                for ca in lo_c[0]..=hi_c[0] {
                    let x0 = ca as f64 * hf;
                    let y0 = cb as f64 * hf;
                    let mut piece = proj.clone();
                    piece = clip2(&piece, |q| q[0] - x0);
                    piece = clip2(&piece, |q| x0 + hf - q[0]);
                    piece = clip2(&piece, |q| q[1] - y0);
                    piece = clip2(&piece, |q| y0 + hf - q[1]);
                    if piece.len() < 3 {
                        continue;
                    }
                    total += data.faces[face][ca + n * cb] / (hf * hf) * area(&piece);
                }
            }
        }
    }
    w.signum() * total
}

/// Radial extension of the boundary data onto an `m³` node grid.
///
/// The cell fluxes of the grid are the exact fluxes of the pullback field, so
/// every cell away from the centre is divergence free and the cells touching
/// the centre carry the whole total.
pub fn radial_extend(data: &CubeFaceData, m: usize, flux_unit: f64, int_tol: f64) -> Result<CubeExtension> {
    if m < 5 {
        return Err(Error::invalid(format!("m = {m} must be at least 5")));
    }
    if !(flux_unit > 0.0) {
        return Err(Error::invalid("flux unit must be positive"));
    }
    let degree = data_degree(data, flux_unit, int_tol).ok_or(Error::NotExact {
        total: data.total(),
        tol: int_tol,
    })?;
    let cube = data.cube;
    let n = m - 1;
    let h = cube.side / n as f64;
    let corner = cube.center - Vec3::splat(cube.half());
    let mut grid = MacGrid::zeros(corner, h, [n, n, n]);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let fd = grid.face_dims(axis);
        for k in 0..fd[2] {
            for j in 0..fd[1] {
                for i in 0..fd[0] {
                    let p = [i, j, k];
                    let c = corner[axis] + p[axis] as f64 * h;
                    let lo = [corner[u] + p[u] as f64 * h, corner[v] + p[v] as f64 * h];
                    let hi = [lo[0] + h, lo[1] + h];
                    grid.set(axis, p, radial_projection_flux(data, axis, c, lo, hi));
                }
            }
        }
    }
    Ok(CubeExtension {
        cube,
        kind: ExtensionKind::Radial,
        n,
        grid,
        potential: None,
        data_range: None,
        solver: None,
        boundary: Some(data.clone()),
        degree,
    })
}

impl CubeExtension {
    /// True for a radial extension of zero-total data, which a harmonic
    /// extension would have handled without a singularity.
    pub fn is_degenerate(&self) -> bool {
        self.kind == ExtensionKind::Radial && self.degree == 0
    }
}
