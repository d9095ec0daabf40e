//! Logarithmic test functions and the growth of `⟨Div X, φ_k⟩` in `k`.
//!
//! `φ_k = k` on `B_{e^{-k}/2}`, `−ln(2|x|)` on the annulus up to `|x| = 1/2`
//! and zero outside. Its gradient has `L^n` norm `(nω_n)^{1/n} k^{1/n}`, so a
//! field whose divergence is `αδ₀` pairs to `αk` while Hölder bounds the
//! pairing by `‖X‖_{L^{n/(n−1)}} k^{1/n}`.

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::Vec3;
use crate::quadrature::{QuadratureSpec, Rule1d};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// `φ_k` on the unit ball of `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogTestFunction {
    pub k: u32,
    pub n: u32,
}

impl LogTestFunction {
    pub fn new(k: u32, n: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if n < 2 {
            return Err(Error::invalid("dimension must be at least 2"));
        }
        Ok(LogTestFunction { k, n })
    }

    /// Inner radius `e^{-k}/2`.
    pub fn inner_radius(&self) -> f64 {
        0.5 * (-(self.k as f64)).exp()
    }

    pub fn value_at_radius(&self, r: f64) -> f64 {
        if r <= self.inner_radius() {
            self.k as f64
        } else if r < 0.5 {
            -(2.0 * r).ln()
        } else {
            0.0
        }
    }

    pub fn value(&self, x: Vec3) -> f64 {
        self.value_at_radius(x.norm())
    }

    /// `−x/|x|²` on the open annulus, zero elsewhere.
    pub fn grad(&self, x: Vec3) -> Vec3 {
        let r2 = x.norm2();
        let r = r2.sqrt();
        if r > self.inner_radius() && r < 0.5 {
            x * (-1.0 / r2)
        } else {
            Vec3::ZERO
        }
    }
}

/// Surface area `nω_n` of the unit sphere in `R^n`.
pub fn sphere_area(n: u32) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// `(nω_n)^{1/n} k^{1/n}`.
pub fn grad_norm_closed_form(k: u32, n: u32) -> f64 {
    (sphere_area(n) * k as f64).powf(1.0 / n as f64)
}

/// Radial panels `[a, b]` with breakpoints at `b·2^{-j}` (roughly equal in `ln r`).
fn log_panels(a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut hi = b;
    while hi * 0.5 > a {
        out.push((hi * 0.5, hi));
        hi *= 0.5;
    }
    out.push((a, hi));
    out.reverse();
    out
}

/// `∫_a^b f(r) dr` on log-spaced panels, each bisected until its halves agree.
///
/// The bisection catches kinks inside a panel, e.g. the core radius of a
/// mollified charge.
fn radial<G: Fn(f64) -> Result<f64>>(rule: &Rule1d, a: f64, b: f64, g: G) -> Result<f64> {
    let apply = |lo: f64, hi: f64| -> Result<f64> {
        let mut s = 0.0;
        for (r, w) in rule.on(lo, hi) {
            s += w * g(r)?;
        }
        Ok(s)
    };
    fn refine(apply: &dyn Fn(f64, f64) -> Result<f64>, lo: f64, hi: f64, whole: f64, depth: u32) -> Result<f64> {
        let mid = 0.5 * (lo + hi);
        let (l, r) = (apply(lo, mid)?, apply(mid, hi)?);
        let split = l + r;
        if depth == 0 || (split - whole).abs() <= 1e-12 * (1.0 + split.abs()) {
            return Ok(split);
        }
        Ok(refine(apply, lo, mid, l, depth - 1)? + refine(apply, mid, hi, r, depth - 1)?)
    }
    let mut s = 0.0;
    for (lo, hi) in log_panels(a, b) {
        s += refine(&apply, lo, hi, apply(lo, hi)?, 20)?;
    }
    Ok(s)
}

/// `∫_{S²} f(ω) dω` with the rule in `cos θ` and twice as many uniform angles in `φ`.
fn spherical<G: FnMut(Vec3) -> Result<f64>>(rule: &Rule1d, mut g: G) -> Result<f64> {
    let np = 2 * rule.len();
    let mut s = 0.0;
    for (ct, wt) in rule.on(-1.0, 1.0) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let mut ring = 0.0;
        for j in 0..np {
            let ph = 2.0 * PI * (j as f64 + 0.5) / np as f64;
            ring += g(Vec3::new(st * ph.cos(), st * ph.sin(), ct))?;
        }
        s += wt * ring;
    }
    Ok(s * 2.0 * PI / np as f64)
}

/// `‖∇φ_k‖_{L^n(B)}` by radial quadrature.
pub fn grad_norm_ln(k: u32, n: u32, quad: &QuadratureSpec) -> Result<f64> {
    let phi = LogTestFunction::new(k, n)?;
    if !(2..=3).contains(&n) {
        return Err(Error::invalid("only n = 2 and n = 3 are supported"));
    }
    quad.validate()?;
    let rule = quad.rule_1d();
    let area = sphere_area(n);
    // |∇φ|^n = r^{-n} on the annulus, times the sphere r^{n-1}
    let integral = radial(&rule, phi.inner_radius(), 0.5, |r| {
        Ok(area * r.powi(-(n as i32)) * r.powi(n as i32 - 1))
    })?;
    Ok(integral.powf(1.0 / n as f64))
}

/// One line of a growth table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: u32,
    pub pairing: f64,
    pub bound: Option<f64>,
    /// `pairing / k`.
    pub ratio: f64,
}

pub fn write_table_csv<W: Write>(rows: &[GrowthRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn check_origin_only<F: VectorField + ?Sized>(field: &F) -> Result<bool> {
    let s = field.singularities();
    match s.as_slice() {
        [] => Ok(false),
        [one] if one.position.norm() < 1e-12 => Ok(true),
        [one] => Err(Error::invalid(format!(
            "singularity at {:?} is not at the origin; shift the field first",
            one.position
        ))),
        _ => Err(Error::invalid(format!(
            "{} singularities; at most one, at the origin, is allowed",
            s.len()
        ))),
    }
}

/// `⟨Div X, φ_k⟩ = −∫ X·∇φ_k = ∫_annulus X·x/|x|²`.
fn pairing_k<F: VectorField + ?Sized>(field: &F, k: u32, rule: &Rule1d) -> Result<f64> {
    let phi = LogTestFunction::new(k, 3)?;
    radial(rule, phi.inner_radius(), 0.5, |r| {
        let flux = spherical(rule, |w| Ok(field.eval(w * r)?.dot(w)))?;
        Ok(flux * r)
    })
}

/// Pairings of `Div X` with `φ_k` for each `k`, and their ratio to `k`.
///
/// For a degree `α` point charge at the origin the ratio is `α·flux_unit`.
pub fn pairing_growth<F: VectorField + ?Sized>(
    field: &F,
    k_list: &[u32],
    quad: &QuadratureSpec,
) -> Result<Vec<GrowthRow>> {
    check_origin_only(field)?;
    quad.validate()?;
    let rule = quad.rule_1d();
    k_list
        .par_iter()
        .map(|&k| {
            let pairing = pairing_k(field, k, &rule)?;
            Ok(GrowthRow {
                k,
                pairing,
                bound: None,
                ratio: pairing / k as f64,
            })
        })
        .collect()
}

/// Estimate of `‖X‖_{L^p(B)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpEstimate {
    pub p: f64,
    pub norm: f64,
    /// `(ρ, ∫_{B∖B_ρ} |X|^p)` for each excised radius; empty without a singularity.
    pub excised: Vec<(f64, f64)>,
    /// Ratio of successive increments; below one when the tail converges.
    pub increment_ratio: Option<f64>,
}

pub const EXCISION_RADII: [f64; 3] = [0.1, 0.05, 0.025];

/// `‖X‖_{L^p(B)}` for a field smooth away from the origin.
///
/// With a singularity at the origin, `∫_{B∖B_ρ}|X|^p` is computed for the
/// radii in [`EXCISION_RADII`] and extrapolated to `ρ = 0` by Aitken's
/// process. An increment ratio of one or more means the integral does not
/// converge, reported as [`Error::LpEstimateDivergence`].
pub fn lp_norm_estimate<F: VectorField + ?Sized>(
    field: &F,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<LpEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p = {p} must be finite and at least 1")));
    }
    quad.validate()?;
    let singular = check_origin_only(field)?;
    let rule = quad.rule_1d();
    let shell = |r: f64| -> Result<f64> {
        let s = spherical(&rule, |w| Ok(field.eval(w * r)?.norm().powf(p)))?;
        Ok(s * r * r)
    };
    if !singular {
        let inner = 1.0 / 64.0;
        let mut total = 0.0;
        for (r, w) in rule.on(0.0, inner) {
            total += w * shell(r)?;
        }
        total += radial(&rule, inner, 1.0, shell)?;
        return Ok(LpEstimate {
            p,
            norm: total.powf(1.0 / p),
            excised: Vec::new(),
            increment_ratio: None,
        });
    }
    let vals = EXCISION_RADII
        .par_iter()
        .map(|&rho| Ok((rho, radial(&rule, rho, 1.0, shell)?)))
        .collect::<Result<Vec<_>>>()?;
    let d1 = vals[1].1 - vals[0].1;
    let d2 = vals[2].1 - vals[1].1;
    let q = if d1 == 0.0 { 0.0 } else { d2 / d1 };
    if q >= 1.0 - 1e-6 {
        return Err(Error::LpEstimateDivergence { p, ratio: q });
    }
    let total = vals[2].1 + d2 * q.max(0.0) / (1.0 - q.max(0.0));
    Ok(LpEstimate {
        p,
        norm: total.powf(1.0 / p),
        excised: vals,
        increment_ratio: Some(q),
    })
}

/// `‖∇φ_k‖_{L^{q}(B)}` in `R³` for `q ∈ [1, ∞]`.
pub fn grad_norm_lq(k: u32, q: f64) -> Result<f64> {
    let phi = LogTestFunction::new(k, 3)?;
    let r0 = phi.inner_radius();
    if q.is_infinite() {
        return Ok(1.0 / r0);
    }
    if !(q >= 1.0) {
        return Err(Error::invalid("exponent must be at least 1"));
    }
    // 4π ∫ r^{2−q} dr over [r0, 1/2]
    let e = 3.0 - q;
    let integral = if e.abs() < 1e-12 {
        4.0 * PI * k as f64
    } else {
        4.0 * PI * (0.5f64.powf(e) - r0.powf(e)) / e
    };
    Ok(integral.powf(1.0 / q))
}

/// Pairings against the Hölder bound `‖X‖_{L^p(B)}·‖∇φ_k‖_{L^{p'}(B)}`.
///
/// At `p = 3/2` the bound is `(4π)^{1/3}‖X‖_{L^{3/2}} k^{1/3}`; for larger
/// `p` it stays bounded in `k`, for smaller `p` it grows exponentially.
pub fn hoelder_bound_check<F: VectorField + ?Sized>(
    field: &F,
    p: f64,
    k_list: &[u32],
    quad: &QuadratureSpec,
) -> Result<(LpEstimate, Vec<GrowthRow>)> {
    let est = lp_norm_estimate(field, p, quad)?;
    let conj = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let mut rows = pairing_growth(field, k_list, quad)?;
    for r in &mut rows {
        r.pairing = r.pairing.abs();
        r.ratio = r.pairing / r.k as f64;
        r.bound = Some(est.norm * grad_norm_lq(r.k, conj)?);
    }
    Ok((est, rows))
}
