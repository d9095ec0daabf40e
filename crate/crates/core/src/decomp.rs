//! Translated ε-lattices of cubes and their good/bad classification.

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flux::{cube_flux, nearest_multiple_distance, sample_ball};
use crate::geometry::{Cube, Vec3};
use crate::quadrature::{QuadratureSpec, Rule1d};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Cube centers `εZ³ + ε/2 + a` whose untranslated position lies in `B_{1−3ε}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeLattice {
    pub eps: f64,
    pub translation: Vec3,
    pub sites: Vec<Vec3>,
    /// Integer lattice coordinates: site `s` is `ε(idx + ½) + a`.
    pub indices: Vec<[i64; 3]>,
}

/// Builds the lattice, enumerated lexicographically in `(x, y, z)`.
pub fn build_lattice(eps: f64, a: Vec3) -> Result<CubeLattice> {
    if !(eps > 0.0 && eps < 1.0 / 3.0) {
        return Err(Error::invalid(format!("eps = {eps} must lie in (0, 1/3)")));
    }
    if !a.is_finite() || a.norm() > eps * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("translation {a:?} longer than eps")));
    }
    let reach = 1.0 - 3.0 * eps;
    let k = (reach / eps).ceil() as i64 + 1;
    let mut sites = Vec::new();
    let mut indices = Vec::new();
    for i in -k..k {
        for j in -k..k {
            for l in -k..k {
                let base = Vec3::new(i as f64 + 0.5, j as f64 + 0.5, l as f64 + 0.5) * eps;
                if base.norm() < reach {
                    sites.push(base + a);
                    indices.push([i, j, l]);
                }
            }
        }
    }
    Ok(CubeLattice {
        eps,
        translation: a,
        sites,
        indices,
    })
}

impl CubeLattice {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn cube(&self, i: usize) -> Cube {
        Cube::new(self.sites[i], self.eps)
    }

    pub fn cubes(&self) -> impl Iterator<Item = Cube> + '_ {
        self.sites.iter().map(move |&s| Cube::new(s, self.eps))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Good,
    Bad,
}

/// Per-cube fluxes, labels and volume means of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeDecomposition {
    pub lattice: CubeLattice,
    /// `NaN` where the flux could not be computed.
    pub fluxes: Vec<f64>,
    pub labels: Vec<Label>,
    pub cell_means: Vec<Vec3>,
    /// Cubes labelled bad only because their flux was ill-conditioned.
    pub flagged: Vec<bool>,
    pub flux_unit: f64,
}

impl CubeDecomposition {
    pub fn bad_indices(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == Label::Bad)
            .collect()
    }

    pub fn n_bad(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::Bad).count()
    }

    /// Nearest integer of `flux / flux_unit`; zero for flagged cubes.
    pub fn degree(&self, i: usize) -> i64 {
        if self.flagged[i] {
            0
        } else {
            (self.fluxes[i] / self.flux_unit).round() as i64
        }
    }

    pub fn bad_volume(&self) -> f64 {
        self.n_bad() as f64 * self.lattice.eps.powi(3)
    }

    /// JSON dump: eps, translation and per-site records.
    pub fn to_json(&self) -> serde_json::Value {
        let sites: Vec<_> = (0..self.lattice.len())
            .map(|i| {
                serde_json::json!({
                    "center": self.lattice.sites[i],
                    "flux": if self.fluxes[i].is_finite() { Some(self.fluxes[i]) } else { None },
                    "label": self.labels[i],
                    "mean": self.cell_means[i],
                    "flagged": self.flagged[i],
                })
            })
            .collect();
        serde_json::json!({
            "eps": self.lattice.eps,
            "a": self.lattice.translation,
            "flux_unit": self.flux_unit,
            "n_bad": self.n_bad(),
            "sites": sites,
        })
    }
}

/// Volume average over the cube by a 4³ Gauss rule. Nodes landing on a
/// singularity are dropped.
pub fn cell_mean<F: VectorField + ?Sized>(field: &F, cube: &Cube) -> Result<Vec3> {
    let rule = Rule1d::gauss_legendre(4);
    let h = cube.half();
    let c = cube.center;
    let mut s = Vec3::ZERO;
    for (x, wx) in rule.on(c.x - h, c.x + h) {
        for (y, wy) in rule.on(c.y - h, c.y + h) {
            for (z, wz) in rule.on(c.z - h, c.z + h) {
                match field.eval(Vec3::new(x, y, z)) {
                    Ok(v) => s += v * (wx * wy * wz),
                    Err(Error::Singular(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(s * (1.0 / cube.side.powi(3)))
}

/// Per-cube labelling. Ill-conditioned cubes are labelled bad and flagged.
pub fn classify<F: VectorField + ?Sized>(
    field: &F,
    lattice: &CubeLattice,
    quad: &QuadratureSpec,
    label_tol: f64,
) -> Result<CubeDecomposition> {
    if !(label_tol > 0.0 && label_tol < 1.0) {
        return Err(Error::invalid("label_tol must lie in (0, 1)"));
    }
    let unit = field.flux_unit();
    let per: Vec<(f64, Vec3, bool)> = (0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let cube = lattice.cube(i);
            let mean = cell_mean(field, &cube).map_err(|e| e.in_cube(i))?;
            match cube_flux(field, &cube, quad) {
                Ok(f) => Ok((f, mean, false)),
                Err(Error::IllConditioned { .. }) => Ok((f64::NAN, mean, true)),
                Err(e) => Err(e.in_cube(i)),
            }
        })
        .collect::<Result<_>>()?;
    let mut dec = CubeDecomposition {
        lattice: lattice.clone(),
        fluxes: Vec::with_capacity(per.len()),
        labels: Vec::with_capacity(per.len()),
        cell_means: Vec::with_capacity(per.len()),
        flagged: Vec::with_capacity(per.len()),
        flux_unit: unit,
    };
    for (f, m, flag) in per {
        let good = !flag && (f / unit).abs() < 1.0 - label_tol;
        dec.fluxes.push(f);
        dec.labels.push(if good { Label::Good } else { Label::Bad });
        dec.cell_means.push(m);
        dec.flagged.push(flag);
    }
    Ok(dec)
}

/// Boundary deviation of a lattice from its piecewise-constant cell means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationScore {
    pub a: Vec3,
    pub score: f64,
}

/// Integrality outcome of each candidate translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralityReport {
    pub candidates: Vec<Vec3>,
    /// Largest distance of a cube flux to the nearest flux-unit multiple;
    /// infinite when a singularity sits on the skeleton.
    pub deficits: Vec<f64>,
    pub survivors: usize,
    pub int_tol: f64,
}

/// Knobs for [`select_translation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectOptions {
    pub int_tol: f64,
    /// Exponent of the deviation score.
    pub p: f64,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions { int_tol: 1e-6, p: 1.0 }
    }
}

/// Minimal distance from a known singularity to the cube skeleton that a
/// translation must keep: one face quadrature cell.
pub fn skeleton_guard<F: VectorField + ?Sized>(field: &F, eps: f64, quad: &QuadratureSpec) -> f64 {
    (eps / quad.n_q as f64).max(field.singular_radius())
}

fn face_deviation<F: VectorField + ?Sized>(
    field: &F,
    cube: &Cube,
    mean: Vec3,
    p: f64,
    rule: &Rule1d,
) -> Result<f64> {
    let h = cube.half();
    let c = cube.center;
    let mut s = 0.0;
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            for (a, wa) in rule.on(c[u] - h, c[u] + h) {
                for (b, wb) in rule.on(c[v] - h, c[v] + h) {
                    let mut x = c;
                    x[axis] += sign * h;
                    x[u] = a;
                    x[v] = b;
                    let val = match field.eval(x) {
                        Ok(val) => val,
                        Err(Error::Singular(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    s += wa * wb * (val[axis] - mean[axis]).abs().powf(p);
                }
            }
        }
    }
    Ok(s)
}

struct Candidate {
    deficit: f64,
    score: f64,
}

fn evaluate_candidate<F: VectorField + ?Sized>(
    field: &F,
    lattice: &CubeLattice,
    quad: &QuadratureSpec,
    opts: &SelectOptions,
) -> Result<Candidate> {
    let guard = skeleton_guard(field, lattice.eps, quad);
    let sings = field.singularities();
    let touching = lattice.cubes().any(|c| {
        let b = c.aabb();
        sings.iter().any(|s| b.boundary_distance(s.position) < guard)
    });
    if touching {
        return Ok(Candidate {
            deficit: f64::INFINITY,
            score: f64::INFINITY,
        });
    }
    let unit = field.flux_unit();
    let dev_rule = Rule1d::gauss_legendre(quad.n_q.min(8));
    let per: Vec<(f64, f64)> = (0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let cube = lattice.cube(i);
            let f = cube_flux(field, &cube, quad).map_err(|e| e.in_cube(i))?;
            let mean = cell_mean(field, &cube)?;
            let dev = face_deviation(field, &cube, mean, opts.p, &dev_rule)?;
            Ok((nearest_multiple_distance(f, unit), dev))
        })
        .collect::<Result<_>>()?;
    let deficit = per.iter().map(|p| p.0).fold(0.0, f64::max);
    let score = lattice.eps * per.iter().map(|p| p.1).sum::<f64>();
    Ok(Candidate { deficit, score })
}

/// Samples `n_samples` translations uniformly in the closed `eps`-ball, drops
/// those with a non-integer cube flux or a singularity on the skeleton, and
/// returns the survivor with the smallest deviation score.
pub fn select_translation<F: VectorField + ?Sized>(
    field: &F,
    eps: f64,
    n_samples: usize,
    quad: &QuadratureSpec,
    seed: u64,
    opts: &SelectOptions,
) -> Result<(Vec3, DeviationScore, IntegralityReport)> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    quad.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<Vec3> = (0..n_samples).map(|_| sample_ball(&mut rng, eps)).collect();
    let mut report = IntegralityReport {
        candidates: candidates.clone(),
        deficits: Vec::with_capacity(n_samples),
        survivors: 0,
        int_tol: opts.int_tol,
    };
    let mut best: Option<DeviationScore> = None;
    for &a in &candidates {
        let lattice = build_lattice(eps, a)?;
        let c = evaluate_candidate(field, &lattice, quad, opts)?;
        report.deficits.push(c.deficit);
        if c.deficit <= opts.int_tol {
            report.survivors += 1;
            if best.map_or(true, |b| c.score < b.score) {
                best = Some(DeviationScore { a, score: c.score });
            }
        }
    }
    match best {
        Some(b) => Ok((b.a, b, report)),
        None => Err(Error::NoValidTranslation {
            candidates: n_samples,
            best_deficit: report.deficits.iter().copied().fold(f64::INFINITY, f64::min),
        }),
    }
}

/// Translation selection followed by classification.
pub fn decompose<F: VectorField + ?Sized>(
    field: &F,
    eps: f64,
    n_samples: usize,
    quad: &QuadratureSpec,
    seed: u64,
    opts: &SelectOptions,
    label_tol: f64,
) -> Result<(CubeDecomposition, DeviationScore, IntegralityReport)> {
    let (a, score, report) = select_translation(field, eps, n_samples, quad, seed, opts)?;
    let dec = classify(field, &build_lattice(eps, a)?, quad, label_tol)?;
    Ok((dec, score, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub n_bad: usize,
    pub volume: f64,
    pub translation: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log(volume)` against `log(eps)`; `None` when
    /// some volume vanishes.
    pub slope: Option<f64>,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Bad-cube count and volume along a descending list of `eps`.
pub fn bad_volume_sweep<F: VectorField + ?Sized>(
    field: &F,
    eps_list: &[f64],
    n_samples: usize,
    quad: &QuadratureSpec,
    seed: u64,
    opts: &SelectOptions,
    label_tol: f64,
) -> Result<SweepTable> {
    if eps_list.len() < 3 || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eps_list needs at least 3 strictly descending entries"));
    }
    let mut rows = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let (dec, score, _) =
            decompose(field, eps, n_samples, quad, seed.wrapping_add(i as u64), opts, label_tol)?;
        rows.push(SweepRow {
            eps,
            n_bad: dec.n_bad(),
            volume: dec.bad_volume(),
            translation: score.a,
        });
    }
    let slope = if rows.iter().all(|r| r.volume > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.volume.ln()).collect();
        Some(fit_slope(&x, &y))
    } else {
        None
    };
    Ok(SweepTable { rows, slope })
}
