use super::faceform::{restrict_to_skeleton, smooth_skeleton, FaceForm, SmoothReport};
use super::harmonic::{harmonic_extend_with, CubeExtension, ExtensionKind, HarmonicOptions, NormalCondition};
use super::mac::MacGrid;
use super::radial::radial_extend;
use super::surface::{gauge_fix_on, SurfaceMesh};
use super::CubeFaceData;
use crate::decomp::{CubeDecomposition, CubeLattice, Label};
use crate::error::{Error, Result};
use crate::field::{Lattice, SampledField, Singularity, VectorField};
use crate::flux::cube_flux;
use crate::geometry::{Aabb, Cube, Vec3};
use crate::quadrature::QuadratureSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Settings of [`assemble`].
#[derive(Clone, Copy)]
pub struct AssembleOptions {
    /// Face smoothing width; `eps / 8` when absent.
    pub delta: Option<f64>,
    /// Nodes per cube edge.
    pub m: usize,
    /// Quadrature for the skeleton restriction.
    pub quad: QuadratureSpec,
    /// Convolve the assembled field with a kernel of radius `delta / 2`.
    pub mollify: bool,
    pub int_tol: f64,
    pub solver_tol: f64,
    /// Normal condition of the harmonic extensions.
    pub normal: NormalCondition<'static>,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            delta: None,
            m: 9,
            quad: QuadratureSpec::gauss(8),
            mollify: true,
            int_tol: 1e-6,
            solver_tol: 1e-8,
            normal: NormalCondition::Neumann,
        }
    }
}

/// Per-cube checks recorded during assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeDiagnostic {
    pub cube: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub center_z: f64,
    pub kind: ExtensionKind,
    /// Outward flux of the smoothed boundary data.
    pub total: f64,
    pub degree: i64,
    /// `‖dα − φ‖` and `‖d*α‖` of the gauge-fixed boundary form.
    pub gauge_residual: Option<f64>,
    pub gauge_codifferential: Option<f64>,
    pub laplace_residual: Option<f64>,
    pub max_principle_violation: Option<f64>,
    pub solver_iterations: Option<usize>,
    /// Largest difference between the extension's boundary face fluxes and the data.
    pub boundary_mismatch: f64,
    /// Largest deviation of concentric sub-cube fluxes from `degree·flux_unit`.
    pub subcube_flux_error: Option<f64>,
}

/// Output of [`assemble`]: a face-flux field on a grid covering the unit box
/// with isolated integer singularities at the bad-cube centres.
#[derive(Debug, Clone)]
pub struct RegularizedField {
    pub grid: MacGrid,
    pub singularities: Vec<Singularity>,
    pub flux_unit: f64,
    pub lattice: CubeLattice,
    pub delta: f64,
    pub mollify_radius: f64,
    pub diagnostics: Vec<CubeDiagnostic>,
    pub smoothing: SmoothReport,
}

impl VectorField for RegularizedField {
    fn eval(&self, x: Vec3) -> Result<Vec3> {
        self.grid.eval(x)
    }

    fn flux_unit(&self) -> f64 {
        self.flux_unit
    }

    fn singularities(&self) -> Vec<Singularity> {
        self.singularities.clone()
    }

    fn singular_radius(&self) -> f64 {
        3f64.sqrt() * self.grid.h + self.mollify_radius
    }

    fn piecewise_lattice(&self) -> Option<Lattice> {
        Some(self.grid.lattice())
    }

    fn domain(&self) -> Option<Aabb> {
        Some(self.grid.bounds())
    }
}

impl RegularizedField {
    /// Node averages of the face fluxes as a sampled field.
    pub fn to_sampled(&self) -> Result<SampledField> {
        let n = self.grid.n;
        let dims = [n[0] + 1, n[1] + 1, n[2] + 1];
        let samples: Vec<Vec3> = (0..dims[0] * dims[1] * dims[2])
            .into_par_iter()
            .map(|i| {
                let p = [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])];
                self.grid.node_value(p)
            })
            .collect();
        SampledField::new(self.grid.origin, self.grid.h, dims, samples)?.with_flux_unit(self.flux_unit)
    }

    /// Writes `regularized.json` (+ `.bin`), `singularities.json` and `cubes.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.to_sampled()?.write(&dir.join("regularized.json"))?;
        let sings = serde_json::json!({
            "flux_unit": self.flux_unit,
            "singularities": self.singularities,
        });
        std::fs::write(dir.join("singularities.json"), serde_json::to_string_pretty(&sings)?)?;
        let mut w = csv::Writer::from_path(dir.join("cubes.csv"))
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        for d in &self.diagnostics {
            w.serialize(d).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// The union of the decomposition cubes.
    pub fn region(&self) -> ErrorRegion<'_> {
        ErrorRegion::Cubes(&self.lattice)
    }

    pub fn bad_degrees(&self) -> Vec<i64> {
        self.singularities.iter().map(|s| s.degree).collect()
    }
}

fn max_boundary_mismatch(ext: &CubeExtension, data: &CubeFaceData) -> f64 {
    let n = ext.n;
    let mut worst: f64 = 0.0;
    for k in 0..6 {
        let axis = k / 2;
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        for b in 0..n {
            for a in 0..n {
                let mut p = [0usize; 3];
                p[axis] = if k % 2 == 1 { n } else { 0 };
                p[u] = a;
                p[v] = b;
                let diff = sign * ext.grid.get(axis, p) - data.faces[k][a + n * b];
                worst = worst.max(diff.abs());
            }
        }
    }
    worst
}

fn extend_cube(
    i: usize,
    dec: &CubeDecomposition,
    ff: &FaceForm,
    mesh: &Arc<SurfaceMesh>,
    opts: &AssembleOptions,
) -> Result<(CubeExtension, CubeDiagnostic)> {
    let data = ff.cube_data(i);
    let cube = dec.lattice.cube(i);
    let unit = dec.flux_unit;
    let mut diag = CubeDiagnostic {
        cube: i,
        center_x: cube.center.x,
        center_y: cube.center.y,
        center_z: cube.center.z,
        kind: ExtensionKind::Harmonic,
        total: ff.cube_total(i),
        degree: 0,
        gauge_residual: None,
        gauge_codifferential: None,
        laplace_residual: None,
        max_principle_violation: None,
        solver_iterations: None,
        boundary_mismatch: 0.0,
        subcube_flux_error: None,
    };
    let ext = match dec.labels[i] {
        Label::Good => {
            let alpha = gauge_fix_on(mesh.clone(), &data, opts.int_tol * unit, 1e-12)?;
            let (r1, r2) = alpha.residuals(&data);
            let hopts = HarmonicOptions {
                solver_tol: opts.solver_tol,
                normal: opts.normal,
            };
            let ext = harmonic_extend_with(&alpha, &cube, opts.m, &hopts)?;
            diag.gauge_residual = Some(r1);
            diag.gauge_codifferential = Some(r2);
            diag.laplace_residual = Some(ext.laplace_residual(&opts.normal));
            diag.max_principle_violation = Some(ext.max_principle_violation());
            diag.solver_iterations = ext.solver.map(|s| s.iter().map(|c| c.iterations).sum());
            ext
        }
        Label::Bad => {
            let ext = radial_extend(&data, opts.m, unit, opts.int_tol)?;
            diag.kind = ExtensionKind::Radial;
            diag.degree = ext.degree;
            let quad = QuadratureSpec::midpoint(4 * data.n);
            let mut worst: f64 = 0.0;
            for r in [0.2, 0.4, 0.6, 0.8] {
                let q = cube_flux(&ext, &Cube::new(cube.center, r * cube.side), &quad)?;
                worst = worst.max((q - ext.degree as f64 * unit).abs());
            }
            diag.subcube_flux_error = Some(worst);
            ext
        }
    };
    diag.boundary_mismatch = max_boundary_mismatch(&ext, &data);
    Ok((ext, diag))
}

/// Regularizes `field` on the cubes of `dec`: skeleton restriction and
/// smoothing, harmonic extension of the gauge-fixed data in good cubes,
/// radial extension in bad cubes, extrusion of the outer skeleton data
/// along grid lines outside the cubes, and a final convolution.
pub fn assemble<F: VectorField + ?Sized>(
    field: &F,
    dec: &CubeDecomposition,
    opts: &AssembleOptions,
) -> Result<RegularizedField> {
    if opts.m < 5 {
        return Err(Error::invalid(format!("m = {} must be at least 5", opts.m)));
    }
    let lattice = &dec.lattice;
    let eps = lattice.eps;
    let delta = opts.delta.unwrap_or(eps / 8.0);
    let n = opts.m - 1;
    let ff = restrict_to_skeleton(field, lattice, n, &opts.quad)?;
    let (ff, smoothing) = smooth_skeleton(&ff, delta)?;
    let mesh = Arc::new(SurfaceMesh::new(n));
    let built: Vec<(CubeExtension, CubeDiagnostic)> = (0..lattice.len())
        .into_par_iter()
        .map(|i| extend_cube(i, dec, &ff, &mesh, opts).map_err(|e| e.in_cube(i)))
        .collect::<Result<_>>()?;

    let h = eps / n as f64;
    let radius = if opts.mollify { delta / 2.0 } else { 0.0 };
    let margin = 3 + (radius / h).ceil() as i64;
    let a = lattice.translation;
    let mut g0 = [0i64; 3];
    let mut dims = [0usize; 3];
    for d in 0..3 {
        g0[d] = ((-1.0 - a[d]) / h).floor() as i64 - margin;
        let top = ((1.0 - a[d]) / h).ceil() as i64 + margin;
        dims[d] = (top - g0[d]) as usize;
    }
    let origin = a + Vec3::new(g0[0] as f64, g0[1] as f64, g0[2] as f64) * h;
    let mut grid = MacGrid::zeros(origin, h, dims);
    let mut inside = vec![false; dims[0] * dims[1] * dims[2]];
    let corner_of = |i: usize| -> [usize; 3] {
        std::array::from_fn(|d| (lattice.indices[i][d] * n as i64 - g0[d]) as usize)
    };
    for (i, (ext, _)) in built.iter().enumerate() {
        let g = corner_of(i);
        for axis in 0..3 {
            let fd = ext.grid.face_dims(axis);
            for k in 0..fd[2] {
                for j in 0..fd[1] {
                    for l in 0..fd[0] {
                        let p = [g[0] + l, g[1] + j, g[2] + k];
                        grid.set(axis, p, ext.grid.get(axis, [l, j, k]));
                    }
                }
            }
        }
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    inside[(g[0] + l) + dims[0] * ((g[1] + j) + dims[1] * (g[2] + k))] = true;
                }
            }
        }
    }
    // shared faces carry the skeleton data exactly
    for (i, ids) in ff.cube_faces.iter().enumerate() {
        let g = corner_of(i);
        for (k, &fi) in ids.iter().enumerate() {
            let axis = k / 2;
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let cells = &ff.faces[fi].cells;
            for b in 0..n {
                for a in 0..n {
                    let mut p = g;
                    p[axis] += if k % 2 == 1 { n } else { 0 };
                    p[u] += a;
                    p[v] += b;
                    grid.set(axis, p, cells[a + n * b]);
                }
            }
        }
    }
    extrude_exterior(&mut grid, &inside)?;
    if radius > 0.0 {
        grid = grid.convolve(radius);
    }
    let mut singularities = Vec::new();
    let mut diagnostics = Vec::with_capacity(built.len());
    for (ext, diag) in built {
        if ext.kind == ExtensionKind::Radial && ext.degree != 0 {
            singularities.push(Singularity::new(ext.cube.center, ext.degree));
        }
        diagnostics.push(diag);
    }
    Ok(RegularizedField {
        grid,
        singularities,
        flux_unit: dec.flux_unit,
        lattice: lattice.clone(),
        delta,
        mollify_radius: radius,
        diagnostics,
        smoothing,
    })
}

/// Along every grid line, copies the first and last face fluxes of the cube
/// region outwards; lines missing the region get zero. Exterior cells are
/// then divergence free.
fn extrude_exterior(grid: &mut MacGrid, inside: &[bool]) -> Result<()> {
    let n = grid.n;
    let cell = |p: [usize; 3]| inside[p[0] + n[0] * (p[1] + n[1] * p[2])];
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for pv in 0..n[v] {
            for pu in 0..n[u] {
                let at = |t: usize| {
                    let mut p = [0usize; 3];
                    p[axis] = t;
                    p[u] = pu;
                    p[v] = pv;
                    p
                };
                let cells: Vec<usize> = (0..n[axis]).filter(|&t| cell(at(t))).collect();
                let Some((&first, &last)) = cells.first().zip(cells.last()) else {
                    for t in 0..=n[axis] {
                        grid.set(axis, at(t), 0.0);
                    }
                    continue;
                };
                if last - first + 1 != cells.len() {
                    return Err(Error::invalid("cube region is not convex along grid lines"));
                }
                let lo = grid.get(axis, at(first));
                let hi = grid.get(axis, at(last + 1));
                for t in 0..first {
                    grid.set(axis, at(t), lo);
                }
                for t in last + 2..=n[axis] {
                    grid.set(axis, at(t), hi);
                }
            }
        }
    }
    Ok(())
}

/// Region over which [`approximation_error`] integrates.
#[derive(Debug, Clone, Copy)]
pub enum ErrorRegion<'a> {
    /// The open unit ball, sampled on a midpoint grid of `[−1, 1]³`.
    Ball,
    /// The union of the lattice cubes, sampled cube by cube.
    Cubes(&'a CubeLattice),
}

/// `(∫_R |X − Y|^p)^{1/p}` by the midpoint rule with cells of size at most
/// `spacing`, leaving out balls of two cells around the singularities of
/// either field. The cell is the coarser of the sample cell and the lattice
/// spacings of the fields.
pub fn approximation_error<F, G>(field: &F, other: &G, p: f64, spacing: f64, region: ErrorRegion) -> Result<f64>
where
    F: VectorField + ?Sized,
    G: VectorField + ?Sized,
{
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid(format!("p = {p} must be at least 1")));
    }
    if !(spacing > 0.0) {
        return Err(Error::invalid("spacing must be positive"));
    }
    let (boxes, k): (Vec<Aabb>, usize) = match region {
        ErrorRegion::Ball => {
            let k = (2.0 / spacing).ceil() as usize;
            (vec![Aabb::new(Vec3::splat(-1.0), Vec3::splat(1.0))], k)
        }
        ErrorRegion::Cubes(l) => {
            let k = (l.eps / spacing).ceil() as usize;
            (l.cubes().map(|c| c.aabb()).collect(), k)
        }
    };
    let hull = boxes.iter().fold(boxes[0], |a, b| {
        Aabb::new(
            Vec3::new(a.lo.x.min(b.lo.x), a.lo.y.min(b.lo.y), a.lo.z.min(b.lo.z)),
            Vec3::new(a.hi.x.max(b.hi.x), a.hi.y.max(b.hi.y), a.hi.z.max(b.hi.z)),
        )
    });
    for d in [field.domain(), other.domain()].into_iter().flatten() {
        if !d.contains_box(&hull) {
            return Err(Error::invalid("field domain does not cover the error region"));
        }
    }
    let step = (boxes[0].hi.x - boxes[0].lo.x) / k as f64;
    let cell = [field.piecewise_lattice(), other.piecewise_lattice()]
        .into_iter()
        .flatten()
        .map(|l| l.spacing)
        .fold(step, f64::max);
    let excl = 2.0 * cell;
    let sings: Vec<Vec3> = field
        .singularities()
        .into_iter()
        .chain(other.singularities())
        .map(|s| s.position)
        .collect();
    let ball = matches!(region, ErrorRegion::Ball);
    let sum: f64 = boxes
        .par_iter()
        .flat_map(|b| (0..k).into_par_iter().map(move |l| (b, l)))
        .map(|(b, l)| {
            let mut s = 0.0;
            let z = b.lo.z + (l as f64 + 0.5) * step;
            for j in 0..k {
                let y = b.lo.y + (j as f64 + 0.5) * step;
                for i in 0..k {
                    let x = Vec3::new(b.lo.x + (i as f64 + 0.5) * step, y, z);
                    if (ball && x.norm2() >= 1.0) || sings.iter().any(|c| (x - *c).norm() < excl) {
                        continue;
                    }
                    let d = field.eval(x)? - other.eval(x)?;
                    s += d.norm().powf(p);
                }
            }
            Ok(s)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok((sum * step.powi(3)).powf(1.0 / p))
}
