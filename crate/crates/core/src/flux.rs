//! Fluxes through axis-aligned cube boundaries.

use crate::error::{Error, Result};
use crate::field::{Singularity, VectorField};
use crate::geometry::{max_admissible_side, Cube, Vec3};
use crate::quadrature::{QuadratureSpec, Rule, Rule1d};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const MAX_DEPTH: usize = 40;
/// Singularities closer than this fraction of the side are reported as ill-conditioned.
const ILL_CONDITIONED: f64 = 1e-7;

/// Name of face `(axis, side)` as used in error messages, e.g. `+x`.
pub fn face_name(axis: usize, positive: bool) -> String {
    format!("{}{}", if positive { '+' } else { '-' }, ['x', 'y', 'z'][axis])
}

/// Distance from `p` to the closed axis-aligned rectangle `{x[axis] = c, lo ≤ x ≤ hi}`.
fn rect_distance(p: Vec3, axis: usize, c: f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let du = (lo[0] - p[u]).max(0.0).max(p[u] - hi[0]);
    let dv = (lo[1] - p[v]).max(0.0).max(p[v] - hi[1]);
    let dn = p[axis] - c;
    (du * du + dv * dv + dn * dn).sqrt()
}

struct FaceIntegrator<'a, F: ?Sized> {
    field: &'a F,
    axis: usize,
    c: f64,
    rule: Rule1d,
    sings: &'a [Singularity],
}

impl<F: VectorField + ?Sized> FaceIntegrator<'_, F> {
    fn point(&self, a: f64, b: f64) -> Vec3 {
        let mut x = Vec3::ZERO;
        x[self.axis] = self.c;
        x[(self.axis + 1) % 3] = a;
        x[(self.axis + 2) % 3] = b;
        x
    }

    fn tensor(&self, rule: &Rule1d, lo: [f64; 2], hi: [f64; 2]) -> Result<f64> {
        let mut s = 0.0;
        for (a, wa) in rule.on(lo[0], hi[0]) {
            let mut row = 0.0;
            for (b, wb) in rule.on(lo[1], hi[1]) {
                row += wb * self.field.eval(self.point(a, b))?[self.axis];
            }
            s += wa * row;
        }
        Ok(s)
    }

    /// Adaptive quadtree: panels closer to a singularity than twice their size are split.
    fn panel(&self, lo: [f64; 2], hi: [f64; 2], depth: usize) -> Result<f64> {
        let size = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let near = self
            .sings
            .iter()
            .any(|s| rect_distance(s.position, self.axis, self.c, lo, hi) < 2.0 * size);
        if near && depth < MAX_DEPTH {
            let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
            let mut s = 0.0;
            for (l, h) in [
                ([lo[0], lo[1]], [mid[0], mid[1]]),
                ([mid[0], lo[1]], [hi[0], mid[1]]),
                ([lo[0], mid[1]], [mid[0], hi[1]]),
                ([mid[0], mid[1]], [hi[0], hi[1]]),
            ] {
                s += self.panel(l, h, depth + 1)?;
            }
            Ok(s)
        } else {
            self.tensor(&self.rule, lo, hi)
        }
    }

    /// Splits at the lattice lines and integrates each piece with a 2×2 Gauss rule.
    fn lattice(&self, lo: [f64; 2], hi: [f64; 2], origin: [f64; 2], h: f64) -> Result<f64> {
        let rule = Rule1d::gauss_legendre(2);
        let cuts = |a: f64, b: f64, o: f64| {
            let mut v = vec![a];
            let mut k = ((a - o) / h).floor() + 1.0;
            loop {
                let t = o + k * h;
                if t >= b - 1e-12 * h {
                    break;
                }
                if t > a + 1e-12 * h {
                    v.push(t);
                }
                k += 1.0;
            }
            v.push(b);
            v
        };
        let cu = cuts(lo[0], hi[0], origin[0]);
        let cv = cuts(lo[1], hi[1], origin[1]);
        let mut s = 0.0;
        for wu in cu.windows(2) {
            for wv in cv.windows(2) {
                s += self.tensor(&rule, [wu[0], wv[0]], [wu[1], wv[1]])?;
            }
        }
        Ok(s)
    }
}

fn rect_flux_with<F: VectorField + ?Sized>(
    field: &F,
    axis: usize,
    c: f64,
    lo: [f64; 2],
    hi: [f64; 2],
    quad: &QuadratureSpec,
    sings: &[Singularity],
) -> Result<f64> {
    let integ = FaceIntegrator {
        field,
        axis,
        c,
        rule: quad.rule_1d(),
        sings,
    };
    let lattice = match quad.rule {
        Rule::GaussLegendre => field.piecewise_lattice(),
        Rule::MidpointComposite => None,
    };
    if let Some(l) = lattice {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        integ.lattice(lo, hi, [l.origin[u], l.origin[v]], l.spacing)
    } else if quad.rule == Rule::GaussLegendre {
        integ.panel(lo, hi, 0)
    } else {
        integ.tensor(&integ.rule, lo, hi)
    }
}

/// Flux along `+e_axis` through the rectangle `{x[axis] = c}`, `lo ≤ (x[u], x[v]) ≤ hi`
/// with `u, v` the next two axes cyclically.
pub fn rect_flux<F: VectorField + ?Sized>(
    field: &F,
    axis: usize,
    c: f64,
    lo: [f64; 2],
    hi: [f64; 2],
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    rect_flux_with(field, axis, c, lo, hi, quad, &field.singularities())
}

/// Outward flux of `field` through each of the six faces, ordered `-x, +x, -y, +y, -z, +z`.
pub fn face_fluxes<F: VectorField + ?Sized>(
    field: &F,
    cube: &Cube,
    quad: &QuadratureSpec,
) -> Result<[f64; 6]> {
    quad.validate()?;
    if !(cube.side > 0.0 && cube.side.is_finite()) || !cube.center.is_finite() {
        return Err(Error::invalid(format!("invalid cube {cube:?}")));
    }
    if let Some(dom) = field.domain() {
        if !dom.contains_box(&cube.aabb()) {
            return Err(Error::OutOfRange(cube.center));
        }
    }
    let sings = field.singularities();
    let half = cube.half();
    let box_ = cube.aabb();
    for s in &sings {
        let d = box_.boundary_distance(s.position);
        if d < ILL_CONDITIONED * cube.side {
            let rel = s.position - cube.center;
            let axis = (0..3)
                .max_by(|&a, &b| rel[a].abs().total_cmp(&rel[b].abs()))
                .unwrap();
            return Err(Error::IllConditioned {
                face: face_name(axis, rel[axis] >= 0.0),
                distance: d,
            });
        }
    }
    let mut out = [0.0; 6];
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let lo = [cube.center[u] - half, cube.center[v] - half];
        let hi = [cube.center[u] + half, cube.center[v] + half];
        for (k, sign) in [(0usize, -1.0), (1, 1.0)] {
            let c = cube.center[axis] + sign * half;
            let val = rect_flux_with(field, axis, c, lo, hi, quad, &sings).map_err(|e| match e {
                Error::Singular(p) => Error::IllConditioned {
                    face: face_name(axis, sign > 0.0),
                    distance: box_.boundary_distance(p),
                },
                e => e,
            })?;
            out[2 * axis + k] = sign * val;
        }
    }
    Ok(out)
}

/// Outward flux `∫_{∂C} X·ν dH²` through the cube boundary.
pub fn cube_flux<F: VectorField + ?Sized>(field: &F, cube: &Cube, quad: &QuadratureSpec) -> Result<f64> {
    Ok(face_fluxes(field, cube, quad)?.iter().sum())
}

/// Distance from `flux` to the nearest multiple of `unit`.
pub fn nearest_multiple_distance(flux: f64, unit: f64) -> f64 {
    (flux - unit * (flux / unit).round()).abs()
}

/// Distance below which a singularity counts as touching the boundary of a
/// cube of side `side`: ten face cells, or the field's unresolved radius.
pub fn skip_guard<F: VectorField + ?Sized>(field: &F, side: f64, quad: &QuadratureSpec) -> f64 {
    (10.0 * side / quad.n_q as f64).max(field.singular_radius())
}

fn near_singularity(sings: &[Singularity], cube: &Cube, guard: f64) -> bool {
    let b = cube.aabb();
    sings.iter().any(|s| b.boundary_distance(s.position) < guard)
}

/// Cube fluxes at increasing radii around a fixed center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxProfile {
    pub center: Vec3,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Radii left out because a singularity was too close to the cube boundary.
    pub skipped: Vec<f64>,
}

/// Flux profile at `n` equally spaced radii in `[r_min, r_max]`.
pub fn flux_profile<F: VectorField + ?Sized>(
    field: &F,
    center: Vec3,
    r_min: f64,
    r_max: f64,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<FluxProfile> {
    let r_adm = max_admissible_side(center);
    if !(r_min > 0.0 && r_min < r_max && r_max < r_adm) || n == 0 {
        return Err(Error::invalid(format!(
            "radius range [{r_min}, {r_max}] not admissible at {center:?} (bound {r_adm:.6})"
        )));
    }
    let radii: Vec<f64> = if n == 1 {
        vec![r_min]
    } else {
        (0..n)
            .map(|i| r_min + (r_max - r_min) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let sings = field.singularities();
    let mut out = FluxProfile {
        center,
        radii: Vec::new(),
        values: Vec::new(),
        skipped: Vec::new(),
    };
    for r in radii {
        let cube = Cube::new(center, r);
        if near_singularity(&sings, &cube, skip_guard(field, r, quad)) {
            out.skipped.push(r);
            continue;
        }
        match cube_flux(field, &cube, quad) {
            Ok(f) => {
                out.radii.push(r);
                out.values.push(f);
            }
            Err(Error::IllConditioned { .. }) => out.skipped.push(r),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One sampled cube of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub center_x: f64,
    pub center_y: f64,
    pub center_z: f64,
    pub radius: f64,
    pub flux: Option<f64>,
    pub nearest_int_dist: Option<f64>,
    pub skipped: bool,
}

/// Result of [`integer_flux_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub cubes: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub violations: usize,
    pub max_nearest_int_dist: f64,
    pub tol: f64,
    pub flux_unit: f64,
    pub seed: u64,
}

/// Uniform sample from the open unit ball.
pub fn sample_ball<R: Rng>(rng: &mut R, radius: f64) -> Vec3 {
    loop {
        let p = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if p.norm2() < 1.0 {
            return p * radius;
        }
    }
}

/// Random cubes: `n_centers` uniform centers in B, each with `radii_per_center`
/// sides uniform in the admissible range.
pub fn sample_cubes(n_centers: usize, radii_per_center: usize, seed: u64) -> Vec<Cube> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cubes = Vec::with_capacity(n_centers * radii_per_center);
    for _ in 0..n_centers {
        let c = sample_ball(&mut rng, 1.0);
        let r_adm = max_admissible_side(c);
        for _ in 0..radii_per_center {
            let r = r_adm * (1.0 - rng.gen::<f64>());
            cubes.push(Cube::new(c, r * (1.0 - 1e-9)));
        }
    }
    cubes
}

fn scan_fluxes<F: VectorField + ?Sized>(
    field: &F,
    cubes: &[Cube],
    quad: &QuadratureSpec,
) -> Result<Vec<Option<f64>>> {
    let sings = field.singularities();
    cubes
        .par_iter()
        .map(|cube| {
            if near_singularity(&sings, cube, skip_guard(field, cube.side, quad)) {
                return Ok(None);
            }
            match cube_flux(field, cube, quad) {
                Ok(f) => Ok(Some(f)),
                Err(Error::IllConditioned { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Samples random cubes and checks that every flux is a multiple of the flux unit.
pub fn integer_flux_scan<F: VectorField + ?Sized>(
    field: &F,
    n_centers: usize,
    radii_per_center: usize,
    tol: f64,
    quad: &QuadratureSpec,
    seed: u64,
) -> Result<ScanReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    quad.validate()?;
    let unit = field.flux_unit();
    let cubes = sample_cubes(n_centers, radii_per_center, seed);
    let fluxes = scan_fluxes(field, &cubes, quad)?;
    let mut summary = ScanSummary {
        cubes: cubes.len(),
        evaluated: 0,
        skipped: 0,
        violations: 0,
        max_nearest_int_dist: 0.0,
        tol,
        flux_unit: unit,
        seed,
    };
    let rows = cubes
        .iter()
        .zip(fluxes)
        .map(|(c, f)| {
            let dist = f.map(|f| nearest_multiple_distance(f, unit));
            match dist {
                Some(d) => {
                    summary.evaluated += 1;
                    summary.max_nearest_int_dist = summary.max_nearest_int_dist.max(d);
                    if d > tol {
                        summary.violations += 1;
                    }
                }
                None => summary.skipped += 1,
            }
            ScanRow {
                center_x: c.center.x,
                center_y: c.center.y,
                center_z: c.center.z,
                radius: c.side,
                flux: f,
                nearest_int_dist: dist,
                skipped: f.is_none(),
            }
        })
        .collect();
    Ok(ScanReport { rows, summary })
}

/// Writes scan rows as CSV.
pub fn write_scan_csv<W: std::io::Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Shell average `(1/2ε) ∫_{r−ε}^{r+ε} F(s) ds` of the flux profile by the
/// midpoint rule on 16 shell radii.
pub fn mollified_divergence<F: VectorField + ?Sized>(
    field: &F,
    center: Vec3,
    r: f64,
    eps: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    const SHELL: usize = 16;
    if !(eps > 0.0 && eps < r) || r + eps >= max_admissible_side(center) {
        return Err(Error::invalid(format!(
            "shell [{}, {}] not admissible at {center:?}",
            r - eps,
            r + eps
        )));
    }
    let ds = 2.0 * eps / SHELL as f64;
    let mut s = 0.0;
    for i in 0..SHELL {
        let side = r - eps + ds * (i as f64 + 0.5);
        s += cube_flux(field, &Cube::new(center, side), quad)?;
    }
    Ok(s / SHELL as f64)
}

/// Outcome of [`divfree_flux_criterion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivFreeReport {
    pub divergence_free: bool,
    pub max_violation: f64,
    pub worst_cube: Option<Cube>,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Tests `Div X = 0` through vanishing fluxes on random cubes.
pub fn divfree_flux_criterion<F: VectorField + ?Sized>(
    field: &F,
    n_centers: usize,
    radii_per_center: usize,
    tol: f64,
    quad: &QuadratureSpec,
    seed: u64,
) -> Result<DivFreeReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    quad.validate()?;
    let cubes = sample_cubes(n_centers, radii_per_center, seed);
    // A singular point inside a cube is exactly what this criterion should see,
    // so only cubes whose boundary passes through a singularity are dropped.
    let fluxes: Vec<Option<f64>> = cubes
        .par_iter()
        .map(|cube| match cube_flux(field, cube, quad) {
            Ok(f) => Ok(Some(f)),
            Err(Error::IllConditioned { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut rep = DivFreeReport {
        divergence_free: true,
        max_violation: 0.0,
        worst_cube: None,
        evaluated: 0,
        skipped: 0,
    };
    for (c, f) in cubes.iter().zip(fluxes) {
        match f {
            Some(f) => {
                rep.evaluated += 1;
                if f.abs() > rep.max_violation {
                    rep.max_violation = f.abs();
                    rep.worst_cube = Some(*c);
                }
            }
            None => rep.skipped += 1,
        }
    }
    rep.divergence_free = rep.max_violation <= tol;
    Ok(rep)
}
