use intflux::connection::{
    certify, dual_value, greedy_connection, optimal_connection, same_signature, Current1, DualCertificate,
};
use intflux::flux::sample_ball;
use intflux::{Singularity, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive minimum over unit matchings: every positive unit either pairs
/// with an unused negative unit or goes to the sphere; leftover negatives go
/// to the sphere as well.
fn brute_force_mass(sings: &[Singularity]) -> f64 {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in sings {
        let list = if s.degree > 0 { &mut pos } else { &mut neg };
        list.extend(std::iter::repeat(s.position).take(s.degree.unsigned_abs() as usize));
    }
    fn go(i: usize, used: u32, pos: &[Vec3], neg: &[Vec3]) -> f64 {
        if i == pos.len() {
            return (0..neg.len())
                .filter(|j| used & (1 << j) == 0)
                .map(|j| 1.0 - neg[j].norm())
                .sum();
        }
        let mut best = 1.0 - pos[i].norm() + go(i + 1, used, pos, neg);
        for j in 0..neg.len() {
            if used & (1 << j) == 0 {
                let c = (pos[i] - neg[j]).norm() + go(i + 1, used | (1 << j), pos, neg);
                best = best.min(c);
            }
        }
        best
    }
    go(0, 0, &pos, &neg)
}

fn random_instance(rng: &mut ChaCha8Rng, max_units: usize) -> Vec<Singularity> {
    loop {
        let n = rng.gen_range(1..7);
        let mut out: Vec<Singularity> = Vec::new();
        for _ in 0..n {
            let d = [-2i64, -1, 1, 2][rng.gen_range(0..4)];
            out.push(Singularity::new(sample_ball(rng, 0.95), d));
        }
        let units: i64 = out.iter().map(|s| s.degree.abs()).sum();
        if units as usize <= max_units {
            return out;
        }
    }
}

fn rotation(rng: &mut ChaCha8Rng) -> [Vec3; 3] {
    // Gram-Schmidt on random columns
    let a = sample_ball(rng, 1.0);
    let b = sample_ball(rng, 1.0);
    let e1 = a * (1.0 / a.norm());
    let b = b - e1 * b.dot(e1);
    let e2 = b * (1.0 / b.norm());
    [e1, e2, e1.cross(e2)]
}

#[test]
fn optimal_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..60 {
        let sings = random_instance(&mut rng, 8);
        let opt = optimal_connection(&sings).unwrap();
        let brute = brute_force_mass(&sings);
        assert!((opt.mass - brute).abs() < 1e-12, "{} vs {brute}", opt.mass);
        assert!(same_signature(&opt.boundary_signature(), &sings));
    }
}

#[test]
fn six_mixed_singularities() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sings: Vec<Singularity> = (0..6)
        .map(|k| Singularity::new(sample_ball(&mut rng, 0.9), [2, -1, 1, -2, 1, -1][k]))
        .collect();
    let opt = optimal_connection(&sings).unwrap();
    assert!((opt.mass - brute_force_mass(&sings)).abs() < 1e-12);
}

#[test]
fn closed_form_instances() {
    let dipole = [
        Singularity::new(Vec3::new(0.25, 0.0, 0.0), 1),
        Singularity::new(Vec3::new(-0.25, 0.0, 0.0), -1),
    ];
    let l = optimal_connection(&dipole).unwrap();
    assert_eq!(l.mass, 0.5);
    let d = dual_value(&dipole).unwrap();
    assert!((d.value - 0.5).abs() < 1e-12);
    assert!((d.potentials[0] - d.potentials[1] - 0.5).abs() < 1e-12);
    assert!(certify(&l, &d, 1e-9).unwrap().certified);
    let near = [Singularity::new(Vec3::new(0.9, 0.0, 0.0), 1)];
    assert_eq!(optimal_connection(&near).unwrap().mass, 1.0 - 0.9);
    let center = [Singularity::new(Vec3::ZERO, 1)];
    assert_eq!(greedy_connection(&center).unwrap().mass, 1.0);
    assert!((dual_value(&center).unwrap().value - 1.0).abs() < 1e-12);
    // far apart pair at equal depth: dual = min(distance, sum of depths)
    let pair = [
        Singularity::new(Vec3::new(0.0, 0.7, 0.0), 1),
        Singularity::new(Vec3::new(0.0, -0.7, 0.0), -1),
    ];
    assert!((dual_value(&pair).unwrap().value - 0.6).abs() < 1e-12);
    let empty = certify(&Current1::default(), &dual_value(&[]).unwrap(), 1e-9).unwrap();
    assert!(empty.certified && empty.mass == 0.0 && empty.dual == 0.0);
}

#[test]
fn greedy_follows_input_order() {
    let (a, b, c) = (Vec3::new(0.1, 0.0, 0.0), Vec3::new(-0.2, 0.1, 0.0), Vec3::new(0.0, -0.3, 0.1));
    let g = greedy_connection(&[Singularity::new(a, 2), Singularity::new(b, -1), Singularity::new(c, -1)]).unwrap();
    assert_eq!(g.segments.len(), 2);
    assert!(g.segments.iter().all(|s| s.end == a && s.multiplicity == 1));
    // a detour forced by the order: the first positive grabs the far negative
    let sings = [
        Singularity::new(Vec3::new(0.5, 0.0, 0.0), 1),
        Singularity::new(Vec3::new(-0.5, 0.0, 0.0), 1),
        Singularity::new(Vec3::new(-0.45, 0.0, 0.0), -1),
    ];
    let g = greedy_connection(&sings).unwrap();
    let d = dual_value(&sings).unwrap();
    let cert = certify(&g, &d, 1e-9).unwrap();
    assert!(!cert.certified && cert.gap > 0.1);
}

#[test]
fn optimal_mass_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let sings = random_instance(&mut rng, 12);
        let r = rotation(&mut rng);
        let turned: Vec<Singularity> = sings
            .iter()
            .map(|s| {
                let p = s.position;
                Singularity::new(Vec3::new(r[0].dot(p), r[1].dot(p), r[2].dot(p)), s.degree)
            })
            .collect();
        let (a, b) = (optimal_connection(&sings).unwrap().mass, optimal_connection(&turned).unwrap().mass);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

fn instance() -> impl Strategy<Value = Vec<Singularity>> {
    prop::collection::vec(
        ((-0.55f64..0.55, -0.55f64..0.55, -0.55f64..0.55), prop::sample::select(vec![-3i64, -2, -1, 1, 2, 3])),
        1..7,
    )
    .prop_map(|v| v.into_iter().map(|((x, y, z), d)| Singularity::new(Vec3::new(x, y, z), d)).collect())
    .prop_filter("distinct points", |v: &Vec<Singularity>| {
        v.iter().enumerate().all(|(i, a)| v[..i].iter().all(|b| (a.position - b.position).norm() > 1e-6))
    })
}

/// A feasible potential: a clamped McShane envelope of random anchor values.
fn feasible_potential(sings: &[Singularity], anchors: &[(Vec3, f64)]) -> DualCertificate {
    let phi = |x: Vec3| {
        let b = 1.0 - x.norm();
        let m = anchors.iter().map(|(y, v)| v - (x - *y).norm()).fold(f64::NEG_INFINITY, f64::max);
        m.clamp(-b, b)
    };
    let potentials: Vec<f64> = sings.iter().map(|s| phi(s.position)).collect();
    let value = sings.iter().zip(&potentials).map(|(s, p)| s.degree as f64 * p).sum();
    DualCertificate {
        singularities: sings.to_vec(),
        potentials,
        value,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weak_and_strong_duality(
        sings in instance(),
        anchors in prop::collection::vec(((-0.9f64..0.9, -0.9f64..0.9, -0.9f64..0.9), -1.0f64..1.0), 1..5),
    ) {
        let anchors: Vec<(Vec3, f64)> = anchors.into_iter().map(|((x, y, z), v)| (Vec3::new(x, y, z), v)).collect();
        let opt = optimal_connection(&sings).unwrap();
        let greedy = greedy_connection(&sings).unwrap();
        let dual = dual_value(&sings).unwrap();
        let any = feasible_potential(&sings, &anchors);
        prop_assert!(any.check(1e-12).is_ok());
        prop_assert!(any.value <= opt.mass + 1e-12);
        prop_assert!(any.value <= dual.value + 1e-9);
        prop_assert!(opt.mass <= greedy.mass + 1e-12);
        prop_assert!(same_signature(&greedy.boundary_signature(), &sings));
        let units: i64 = sings.iter().map(|s| s.degree.abs()).sum();
        if units <= 12 {
            prop_assert!(opt.mass - dual.value <= 1e-9, "gap {}", opt.mass - dual.value);
        }
        prop_assert!((opt.mass - opt.segments.iter().map(|s| s.mass()).sum::<f64>()).abs() < 1e-12);
    }
}
