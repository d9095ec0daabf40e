//! Integer 1-currents joining signed point singularities: a greedy feasible
//! connection, the exact mass minimizer with the sphere as a free reservoir,
//! the dual Lipschitz-potential value and optimality certificates.

mod flow;
mod residual;
mod simplex;

pub use residual::{boundary_residual, BumpTest, ResidualReport};

use crate::error::{Error, Result};
use crate::field::Singularity;
use crate::geometry::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Oriented segment `start → end` with a positive integer multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Vec3,
    pub end: Vec3,
    pub multiplicity: u32,
}

impl Segment {
    pub fn mass(&self) -> f64 {
        self.multiplicity as f64 * (self.end - self.start).norm()
    }
}

/// Finite sum of oriented segments. Its boundary is `Σ m (δ_end − δ_start)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Current1 {
    pub segments: Vec<Segment>,
    pub mass: f64,
}

impl Current1 {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.iter().any(|s| s.multiplicity == 0) {
            return Err(Error::invalid("segment multiplicities must be positive"));
        }
        if segments.iter().any(|s| !s.start.is_finite() || !s.end.is_finite()) {
            return Err(Error::invalid("segment endpoints must be finite"));
        }
        let mass = segments.iter().map(Segment::mass).sum();
        Ok(Current1 { segments, mass })
    }

    /// Merges segments with identical endpoints.
    fn merged(segments: Vec<Segment>) -> Self {
        let mut out: Vec<Segment> = Vec::new();
        for s in segments {
            match out.iter_mut().find(|o| o.start == s.start && o.end == s.end) {
                Some(o) => o.multiplicity += s.multiplicity,
                None => out.push(s),
            }
        }
        let mass = out.iter().map(Segment::mass).sum();
        Current1 { segments: out, mass }
    }

    /// Net degree at every interior endpoint; points on the unit sphere and
    /// points with zero net degree are left out.
    pub fn boundary_signature(&self) -> Vec<Singularity> {
        let mut net: BTreeMap<[u64; 3], i64> = BTreeMap::new();
        let key = |p: Vec3| p.to_array().map(f64::to_bits);
        for s in &self.segments {
            *net.entry(key(s.end)).or_default() += s.multiplicity as i64;
            *net.entry(key(s.start)).or_default() -= s.multiplicity as i64;
        }
        net.into_iter()
            .map(|(k, d)| (Vec3::from(k.map(f64::from_bits)), d))
            .filter(|(p, d)| *d != 0 && p.norm() < 1.0 - 1e-12)
            .map(|(p, d)| Singularity::new(p, d))
            .collect()
    }

    /// `⟨∂L, φ⟩ = Σ m (φ(end) − φ(start))`.
    pub fn boundary_pairing(&self, phi: impl Fn(Vec3) -> f64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.multiplicity as f64 * (phi(s.end) - phi(s.start)))
            .sum()
    }

    /// One CSV row per segment endpoint.
    pub fn write_polyline_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            segment: usize,
            vertex: usize,
            x: f64,
            y: f64,
            z: f64,
            multiplicity: u32,
        }
        let mut w = csv::Writer::from_writer(out);
        let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        for (i, s) in self.segments.iter().enumerate() {
            for (v, p) in [s.start, s.end].into_iter().enumerate() {
                w.serialize(Row {
                    segment: i,
                    vertex: v,
                    x: p.x,
                    y: p.y,
                    z: p.z,
                    multiplicity: s.multiplicity,
                })
                .map_err(to_io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Same signature as a multiset of (point, degree), compared after sorting.
pub fn same_signature(a: &[Singularity], b: &[Singularity]) -> bool {
    let norm = |s: &[Singularity]| {
        let mut m: BTreeMap<[u64; 3], i64> = BTreeMap::new();
        for x in s {
            *m.entry(x.position.to_array().map(f64::to_bits)).or_default() += x.degree;
        }
        m.retain(|_, d| *d != 0);
        m
    };
    norm(a) == norm(b)
}

/// Nearest point of the unit sphere; `+e_x` for the origin.
pub fn nearest_boundary_point(x: Vec3) -> Vec3 {
    let r = x.norm();
    if r == 0.0 {
        Vec3::axis(0)
    } else {
        x * (1.0 / r)
    }
}

fn validate(sings: &[Singularity]) -> Result<()> {
    for (i, s) in sings.iter().enumerate() {
        s.validate()?;
        if s.degree == 0 {
            return Err(Error::invalid(format!("singularity {i} has degree 0")));
        }
        if !(s.position.norm() < 1.0) {
            return Err(Error::invalid(format!("singularity {i} lies outside the open unit ball")));
        }
        if sings[..i].iter().any(|t| t.position == s.position) {
            return Err(Error::invalid(format!("singularity {i} repeats an earlier position")));
        }
    }
    Ok(())
}

/// Feasible connection built by walking the positive nodes in input order and
/// attaching negative nodes in input order, carrying remainders from one
/// node to the next. Leftover degree is routed to the nearest boundary point.
/// The result depends on the input order.
pub fn greedy_connection(sings: &[Singularity]) -> Result<Current1> {
    validate(sings)?;
    let pos: Vec<&Singularity> = sings.iter().filter(|s| s.degree > 0).collect();
    let neg: Vec<&Singularity> = sings.iter().filter(|s| s.degree < 0).collect();
    let mut segs = Vec::new();
    let (mut i, mut j) = (0, 0);
    let mut rem_p = pos.first().map_or(0, |s| s.degree);
    let mut rem_n = neg.first().map_or(0, |s| -s.degree);
    while i < pos.len() && j < neg.len() {
        let m = rem_p.min(rem_n);
        segs.push(Segment {
            start: neg[j].position,
            end: pos[i].position,
            multiplicity: m as u32,
        });
        rem_p -= m;
        rem_n -= m;
        if rem_p == 0 {
            i += 1;
            rem_p = pos.get(i).map_or(0, |s| s.degree);
        }
        if rem_n == 0 {
            j += 1;
            rem_n = neg.get(j).map_or(0, |s| -s.degree);
        }
    }
    while i < pos.len() {
        let p = pos[i].position;
        segs.push(Segment {
            start: nearest_boundary_point(p),
            end: p,
            multiplicity: rem_p as u32,
        });
        i += 1;
        rem_p = pos.get(i).map_or(0, |s| s.degree);
    }
    while j < neg.len() {
        let q = neg[j].position;
        segs.push(Segment {
            start: q,
            end: nearest_boundary_point(q),
            multiplicity: rem_n as u32,
        });
        j += 1;
        rem_n = neg.get(j).map_or(0, |s| -s.degree);
    }
    Ok(Current1::merged(segs))
}

/// Mass-minimizing integer current with the prescribed interior boundary.
///
/// Degrees are expanded into unit nodes and the unbalanced transport problem
/// is solved as a min-cost flow through a boundary reservoir reachable from
/// every node at cost `1 − |x|`.
pub fn optimal_connection(sings: &[Singularity]) -> Result<Current1> {
    validate(sings)?;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (k, s) in sings.iter().enumerate() {
        let units = s.degree.unsigned_abs() as usize;
        let list = if s.degree > 0 { &mut pos } else { &mut neg };
        list.extend(std::iter::repeat(k).take(units));
    }
    let (np, nn) = (pos.len(), neg.len());
    // nodes: source, positives, negatives, reservoir, sink
    let src = 0;
    let p0 = 1;
    let n0 = p0 + np;
    let res = n0 + nn;
    let sink = res + 1;
    let mut g = flow::Network::new(sink + 1);
    let to_res = |k: usize| 1.0 - sings[k].position.norm();
    for (a, &k) in pos.iter().enumerate() {
        g.add_edge(src, p0 + a, 1, 0.0);
        for (b, &l) in neg.iter().enumerate() {
            g.add_edge(p0 + a, n0 + b, 1, (sings[k].position - sings[l].position).norm());
        }
        g.add_edge(p0 + a, res, 1, to_res(k));
    }
    for (b, &l) in neg.iter().enumerate() {
        g.add_edge(res, n0 + b, 1, to_res(l));
        g.add_edge(n0 + b, sink, 1, 0.0);
    }
    g.add_edge(src, res, nn as i64, 0.0);
    g.add_edge(res, sink, np as i64, 0.0);
    let (value, _) = g.min_cost_flow(src, sink, (np + nn) as i64)?;
    debug_assert_eq!(value, (np + nn) as i64);
    let mut segs = Vec::new();
    for e in g.edges() {
        if e.flow <= 0 {
            continue;
        }
        let m = e.flow as u32;
        let (u, v) = (e.from, e.to);
        if (p0..n0).contains(&u) && (n0..res).contains(&v) {
            segs.push(Segment {
                start: sings[neg[v - n0]].position,
                end: sings[pos[u - p0]].position,
                multiplicity: m,
            });
        } else if (p0..n0).contains(&u) && v == res {
            let p = sings[pos[u - p0]].position;
            segs.push(Segment {
                start: nearest_boundary_point(p),
                end: p,
                multiplicity: m,
            });
        } else if u == res && (n0..res).contains(&v) {
            let q = sings[neg[v - n0]].position;
            segs.push(Segment {
                start: q,
                end: nearest_boundary_point(q),
                multiplicity: m,
            });
        }
    }
    Ok(Current1::merged(segs))
}

/// Potential values at the singularities and the dual value `Σ d_j φ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub singularities: Vec<Singularity>,
    pub potentials: Vec<f64>,
    pub value: f64,
}

impl DualCertificate {
    /// Checks `|φ_i − φ_j| ≤ |x_i − x_j|` and `|φ_j| ≤ 1 − |x_j|` up to `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let s = &self.singularities;
        if self.potentials.len() != s.len() {
            return Err(Error::CertificateInvalid("one potential per singularity required".into()));
        }
        for (j, (x, &p)) in s.iter().zip(&self.potentials).enumerate() {
            let b = 1.0 - x.position.norm();
            if p.abs() > b + tol {
                return Err(Error::CertificateInvalid(format!(
                    "support constraint at {j}: |φ| = {} > {b}",
                    p.abs()
                )));
            }
            for i in 0..j {
                let d = (s[i].position - x.position).norm();
                let gap = (self.potentials[i] - p).abs();
                if gap > d + tol {
                    return Err(Error::CertificateInvalid(format!(
                        "Lipschitz constraint between {i} and {j}: {gap} > {d}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Maximizes `Σ d_j φ_j` over potentials that are 1-Lipschitz on the singular
/// set and bounded by the distance to the sphere, by the simplex method.
pub fn dual_value(sings: &[Singularity]) -> Result<DualCertificate> {
    validate(sings)?;
    let n = sings.len();
    // ψ_j = φ_j + b_j ≥ 0 with b_j = 1 − |x_j|
    let b: Vec<f64> = sings.iter().map(|s| 1.0 - s.position.norm()).collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        rows.push(r);
        rhs.push(2.0 * b[j]);
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r[j] = -1.0;
            rows.push(r);
            let d = (sings[i].position - sings[j].position).norm();
            rhs.push((d + b[i] - b[j]).max(0.0));
        }
    }
    let c: Vec<f64> = sings.iter().map(|s| s.degree as f64).collect();
    let psi = simplex::maximize(&c, &rows, &rhs)?;
    let potentials: Vec<f64> = psi.iter().zip(&b).map(|(p, b)| p - b).collect();
    let value = potentials.iter().zip(&c).map(|(p, d)| p * d).sum();
    Ok(DualCertificate {
        singularities: sings.to_vec(),
        potentials,
        value,
    })
}

/// Outcome of [`certify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub certified: bool,
    pub mass: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Checks that `primal` has the certificate's boundary, that the certificate is
/// feasible, and whether the duality gap is at most `tol`.
pub fn certify(primal: &Current1, dual: &DualCertificate, tol: f64) -> Result<Certificate> {
    dual.check(1e-9)?;
    if !same_signature(&primal.boundary_signature(), &dual.singularities) {
        return Err(Error::CertificateInvalid(
            "current boundary differs from the singularity list".into(),
        ));
    }
    let gap = primal.mass - dual.value;
    Ok(Certificate {
        certified: gap <= tol,
        mass: primal.mass,
        dual: dual.value,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64, y: f64, z: f64, d: i64) -> Singularity {
        Singularity::new(Vec3::new(x, y, z), d)
    }

    #[test]
    fn dipole() {
        let sings = [s(0.25, 0.0, 0.0, 1), s(-0.25, 0.0, 0.0, -1)];
        let g = greedy_connection(&sings).unwrap();
        assert_eq!(g.segments.len(), 1);
        assert_eq!(g.segments[0].start, sings[1].position);
        let o = optimal_connection(&sings).unwrap();
        assert_eq!(o.mass, 0.5);
        let d = dual_value(&sings).unwrap();
        assert!((d.value - 0.5).abs() < 1e-12);
        assert!((d.potentials[0] - d.potentials[1] - 0.5).abs() < 1e-12);
        let c = certify(&o, &d, 1e-9).unwrap();
        assert!(c.certified && c.gap.abs() <= 1e-9);
    }

    #[test]
    fn single_charges() {
        let o = optimal_connection(&[s(0.9, 0.0, 0.0, 1)]).unwrap();
        assert!((o.mass - 0.1).abs() < 1e-15);
        let g = greedy_connection(&[s(0.0, 0.0, 0.0, 1)]).unwrap();
        assert_eq!(g.mass, 1.0);
        let d = dual_value(&[s(0.0, 0.0, 0.0, 1)]).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12 && (d.potentials[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_carries_remainders() {
        let sings = [s(0.0, 0.0, 0.0, 2), s(0.3, 0.0, 0.0, -1), s(0.0, 0.3, 0.0, -1)];
        let g = greedy_connection(&sings).unwrap();
        assert_eq!(g.segments.len(), 2);
        assert!(g.segments.iter().all(|x| x.multiplicity == 1 && x.end == Vec3::ZERO));
        assert!(same_signature(&g.boundary_signature(), &sings));
    }

    #[test]
    fn greedy_can_be_suboptimal() {
        let sings = [s(0.5, 0.0, 0.0, 1), s(-0.45, 0.0, 0.0, -1), s(-0.5, 0.0, 0.0, 1)];
        let g = greedy_connection(&sings).unwrap();
        let o = optimal_connection(&sings).unwrap();
        assert!((g.mass - 1.45).abs() < 1e-12);
        assert!((o.mass - 0.55).abs() < 1e-12);
        let d = dual_value(&sings).unwrap();
        let c = certify(&g, &d, 1e-9).unwrap();
        assert!(!c.certified && c.gap > 0.8);
    }

    #[test]
    fn empty_instance() {
        let o = optimal_connection(&[]).unwrap();
        let d = dual_value(&[]).unwrap();
        let c = certify(&o, &d, 1e-9).unwrap();
        assert!(c.certified && c.mass == 0.0 && c.dual == 0.0);
        assert!(greedy_connection(&[]).unwrap().segments.is_empty());
    }

    #[test]
    fn infeasible_certificate_rejected() {
        let sings = vec![s(0.5, 0.0, 0.0, 1)];
        let bad = DualCertificate {
            singularities: sings.clone(),
            potentials: vec![0.7],
            value: 0.7,
        };
        let o = optimal_connection(&sings).unwrap();
        match certify(&o, &bad, 1e-9) {
            Err(Error::CertificateInvalid(m)) => assert!(m.contains("support")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(optimal_connection(&[s(1.0, 0.0, 0.0, 1)]).is_err());
        assert!(optimal_connection(&[s(0.1, 0.0, 0.0, 0)]).is_err());
        assert!(Current1::new(vec![Segment { start: Vec3::ZERO, end: Vec3::axis(0), multiplicity: 0 }]).is_err());
    }
}
