use super::Current1;
use crate::error::Result;
use crate::field::VectorField;
use crate::flux::sample_ball;
use crate::geometry::Vec3;
use crate::quadrature::Rule1d;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One test function `φ(x) = exp(1 − 1/(1 − s²))`, `s = |x − c|/ρ`, and both pairings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpTest {
    pub center: Vec3,
    pub radius: f64,
    /// `−∫ X·∇φ / flux_unit`.
    pub field_pairing: f64,
    /// `Σ m (φ(end) − φ(start))`.
    pub current_pairing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub tests: Vec<BumpTest>,
}

fn bump(c: Vec3, rho: f64, x: Vec3) -> f64 {
    let s2 = (x - c).norm2() / (rho * rho);
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s2)).exp()
    }
}

fn bump_grad(c: Vec3, rho: f64, x: Vec3) -> Vec3 {
    let d = x - c;
    let s2 = d.norm2() / (rho * rho);
    if s2 >= 1.0 {
        return Vec3::ZERO;
    }
    let q = 1.0 - s2;
    d * (-2.0 * (1.0 - 1.0 / q).exp() / (q * q * rho * rho))
}

/// `∫ X·∇φ` in spherical coordinates about `o`, a point inside the bump:
/// the `r²` Jacobian absorbs a point singularity at `o`.
fn pairing<F: VectorField + ?Sized>(field: &F, c: Vec3, rho: f64, o: Vec3) -> Result<f64> {
    let rr = Rule1d::gauss_legendre(40);
    let rt = Rule1d::gauss_legendre(24);
    let np = 48;
    let d = o - c;
    let mut s = 0.0;
    for (ct, wt) in rt.on(-1.0, 1.0) {
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..np {
            let ph = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / np as f64;
            let w = Vec3::new(st * ph.cos(), st * ph.sin(), ct);
            let wd = w.dot(d);
            let rmax = -wd + (wd * wd - d.norm2() + rho * rho).max(0.0).sqrt();
            let mut line = 0.0;
            for (r, wr) in rr.on(0.0, rmax) {
                let x = o + w * r;
                line += wr * r * r * field.eval(x)?.dot(bump_grad(c, rho, x));
            }
            s += wt * line;
        }
    }
    Ok(s * 2.0 * std::f64::consts::PI / np as f64)
}

/// Largest discrepancy between `−∫ X·∇φ / flux_unit` and `⟨∂L, φ⟩` over
/// `n_test` random bumps supported in the unit ball.
pub fn boundary_residual<F: VectorField + ?Sized>(
    field: &F,
    current: &Current1,
    n_test: usize,
    seed: u64,
) -> Result<ResidualReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(Vec3, f64)> = (0..n_test)
        .map(|_| {
            let c = sample_ball(&mut rng, 0.6);
            let rho = (1.0 - c.norm()) * rng.gen_range(0.5..0.999);
            (c, rho)
        })
        .collect();
    let sings = field.singularities();
    let unit = field.flux_unit();
    let tests: Vec<BumpTest> = bumps
        .par_iter()
        .map(|&(c, rho)| {
            let o = sings
                .iter()
                .map(|s| s.position)
                .filter(|p| (*p - c).norm() < rho)
                .min_by(|a, b| (*a - c).norm().total_cmp(&(*b - c).norm()))
                .unwrap_or(c);
            let field_pairing = -pairing(field, c, rho, o)? / unit;
            let current_pairing = current.boundary_pairing(|x| bump(c, rho, x));
            Ok(BumpTest {
                center: c,
                radius: rho,
                field_pairing,
                current_pairing,
            })
        })
        .collect::<Result<_>>()?;
    let max_residual = tests
        .iter()
        .map(|t| (t.field_pairing - t.current_pairing).abs())
        .fold(0.0, f64::max);
    Ok(ResidualReport { max_residual, tests })
}
