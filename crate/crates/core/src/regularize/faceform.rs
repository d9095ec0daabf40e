use super::CubeFaceData;
use crate::decomp::{skeleton_guard, CubeLattice};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flux::rect_flux;
use crate::quadrature::QuadratureSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// One face of the cube skeleton, stored once.
///
/// The face is normal to `axis` and lies at `x[axis] = a[axis] + ε·corner[axis]`,
/// spanning `ε·[corner[u], corner[u]+1] × ε·[corner[v], corner[v]+1]` (plus the
/// translation) in the next two axes. Fluxes are oriented along `+e_axis`,
/// i.e. outward from the cube on the low side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonFace {
    pub axis: usize,
    pub corner: [i64; 3],
    pub cells: Vec<f64>,
    /// The face integral, kept separately from the cell values.
    pub total: f64,
    /// Cube on the low side (this is its `+axis` face) and on the high side.
    pub cubes: [Option<usize>; 2],
}

/// Normal flux data on the union of all cube faces of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceForm {
    pub lattice: CubeLattice,
    pub n_f: usize,
    pub faces: Vec<SkeletonFace>,
    /// Per cube: face indices ordered `−x, +x, −y, +y, −z, +z`.
    pub cube_faces: Vec<[usize; 6]>,
}

impl FaceForm {
    /// Builds the skeleton with all cell values zero.
    pub fn zeros(lattice: &CubeLattice, n_f: usize) -> Result<Self> {
        if n_f == 0 {
            return Err(Error::invalid("n_f must be positive"));
        }
        let mut index: HashMap<(usize, [i64; 3]), usize> = HashMap::new();
        let mut faces: Vec<SkeletonFace> = Vec::new();
        let mut cube_faces = Vec::with_capacity(lattice.len());
        for (ci, idx) in lattice.indices.iter().enumerate() {
            let mut ids = [0usize; 6];
            for axis in 0..3 {
                for (side, off) in [(0usize, 0i64), (1, 1)] {
                    let mut corner = *idx;
                    corner[axis] += off;
                    let fi = *index.entry((axis, corner)).or_insert_with(|| {
                        faces.push(SkeletonFace {
                            axis,
                            corner,
                            cells: vec![0.0; n_f * n_f],
                            total: 0.0,
                            cubes: [None, None],
                        });
                        faces.len() - 1
                    });
                    // the cube's −face has it on the high side and vice versa
                    faces[fi].cubes[1 - side] = Some(ci);
                    ids[2 * axis + side] = fi;
                }
            }
            cube_faces.push(ids);
        }
        Ok(FaceForm {
            lattice: lattice.clone(),
            n_f,
            faces,
            cube_faces,
        })
    }

    /// Plane coordinate and lower corner of a face in world coordinates.
    pub fn face_geometry(&self, fi: usize) -> (f64, [f64; 2]) {
        let f = &self.faces[fi];
        let eps = self.lattice.eps;
        let a = self.lattice.translation;
        let (u, v) = ((f.axis + 1) % 3, (f.axis + 2) % 3);
        (
            a[f.axis] + eps * f.corner[f.axis] as f64,
            [a[u] + eps * f.corner[u] as f64, a[v] + eps * f.corner[v] as f64],
        )
    }

    /// Outward cell fluxes of cube `i`.
    pub fn cube_data(&self, i: usize) -> CubeFaceData {
        let faces = std::array::from_fn(|k| {
            let f = &self.faces[self.cube_faces[i][k]];
            if k % 2 == 1 {
                f.cells.clone()
            } else {
                f.cells.iter().map(|v| -v).collect()
            }
        });
        CubeFaceData {
            cube: self.lattice.cube(i),
            n: self.n_f,
            faces,
        }
    }

    /// Outward flux of cube `i` from the stored face totals.
    pub fn cube_total(&self, i: usize) -> f64 {
        let mut s = 0.0;
        for k in 0..6 {
            let t = self.faces[self.cube_faces[i][k]].total;
            s += if k % 2 == 1 { t } else { -t };
        }
        s
    }

    pub fn cube_totals(&self) -> Vec<f64> {
        (0..self.cube_faces.len()).map(|i| self.cube_total(i)).collect()
    }

    /// Name used in error messages.
    pub fn face_label(&self, fi: usize) -> String {
        let f = &self.faces[fi];
        format!("{} face at lattice corner {:?}", ['x', 'y', 'z'][f.axis], f.corner)
    }
}

/// Restricts `field` to the skeleton of `lattice`: per face cell, the flux along `+e_axis`.
pub fn restrict_to_skeleton<F: VectorField + ?Sized>(
    field: &F,
    lattice: &CubeLattice,
    n_f: usize,
    quad: &QuadratureSpec,
) -> Result<FaceForm> {
    quad.validate()?;
    let mut ff = FaceForm::zeros(lattice, n_f)?;
    let guard = skeleton_guard(field, lattice.eps, quad);
    let sings = field.singularities();
    let h = lattice.eps / n_f as f64;
    let eps = lattice.eps;
    let computed: Vec<Vec<f64>> = (0..ff.faces.len())
        .into_par_iter()
        .map(|fi| {
            let axis = ff.faces[fi].axis;
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let (c, lo) = ff.face_geometry(fi);
            for s in &sings {
                let p = s.position;
                let du = (lo[0] - p[u]).max(0.0).max(p[u] - lo[0] - eps);
                let dv = (lo[1] - p[v]).max(0.0).max(p[v] - lo[1] - eps);
                let d = (du * du + dv * dv + (p[axis] - c).powi(2)).sqrt();
                if d < guard {
                    return Err(Error::IllConditioned {
                        face: ff.face_label(fi),
                        distance: d,
                    });
                }
            }
            let mut cells = vec![0.0; n_f * n_f];
            for b in 0..n_f {
                for a in 0..n_f {
                    let l = [lo[0] + a as f64 * h, lo[1] + b as f64 * h];
                    cells[a + n_f * b] = rect_flux(field, axis, c, l, [l[0] + h, l[1] + h], quad)?;
                }
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;
    for (f, cells) in ff.faces.iter_mut().zip(computed) {
        f.total = cells.iter().sum();
        f.cells = cells;
    }
    Ok(ff)
}

/// What [`smooth_skeleton`] did to each face.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SmoothReport {
    /// Faces whose integral was restored additively instead of by scaling.
    pub additive_faces: Vec<usize>,
}

/// Mollifies every face with the kernel `(1 − |d|²/δ²)³` (normalized on the
/// face) and rescales so each face integral equals its stored total. Totals
/// are left untouched, so every cube total is unchanged.
pub fn smooth_skeleton(ff: &FaceForm, delta: f64) -> Result<(FaceForm, SmoothReport)> {
    let face_size = ff.lattice.eps;
    if !(delta > 0.0 && delta < face_size / 4.0) {
        return Err(Error::invalid(format!(
            "delta = {delta} must lie in (0, {})",
            face_size / 4.0
        )));
    }
    let n = ff.n_f;
    let h = face_size / n as f64;
    let r = (delta / h).ceil() as i64;
    let mut stencil = Vec::new();
    for db in -r..=r {
        for da in -r..=r {
            let d2 = ((da * da + db * db) as f64) * h * h;
            let q = 1.0 - d2 / (delta * delta);
            if q > 0.0 {
                stencil.push((da, db, q * q * q));
            }
        }
    }
    let mut out = ff.clone();
    let mut report = SmoothReport::default();
    for (fi, face) in out.faces.iter_mut().enumerate() {
        let src = &ff.faces[fi].cells;
        let mut dst = vec![0.0; n * n];
        for b in 0..n as i64 {
            for a in 0..n as i64 {
                let (mut s, mut w) = (0.0, 0.0);
                for &(da, db, k) in &stencil {
                    let (pa, pb) = (a + da, b + db);
                    if pa >= 0 && pb >= 0 && pa < n as i64 && pb < n as i64 {
                        s += k * src[(pa + n as i64 * pb) as usize];
                        w += k;
                    }
                }
                dst[(a + n as i64 * b) as usize] = s / w;
            }
        }
        let sum: f64 = dst.iter().sum();
        let total = face.total;
        let ratio = total / sum;
        if total * sum > 0.0 && (ratio - 1.0).abs() <= 0.5 {
            dst.iter_mut().for_each(|v| *v *= ratio);
        } else if total != sum {
            let shift = (total - sum) / (n * n) as f64;
            dst.iter_mut().for_each(|v| *v += shift);
            if (total - sum).abs() > 1e-15 * (1.0 + total.abs()) {
                report.additive_faces.push(fi);
            }
        }
        face.cells = dst;
    }
    Ok((out, report))
}
