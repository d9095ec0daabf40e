use intflux::asymptotics::{
    grad_norm_closed_form, grad_norm_ln, hoelder_bound_check, lp_norm_estimate, pairing_growth, LogTestFunction,
};
use intflux::field::{coulomb_superposition, d_field, AnalyticField, Background, MapDescriptor, ZeroField};
use intflux::{Error, QuadratureSpec, Singularity, Vec3};
use std::f64::consts::PI;

fn quad() -> QuadratureSpec {
    QuadratureSpec::gauss(16)
}

#[test]
fn gradient_norms_match_closed_form() {
    for n in [2, 3] {
        for k in 1..=16 {
            let num = grad_norm_ln(k, n, &quad()).unwrap();
            let exact = grad_norm_closed_form(k, n);
            assert!((num / exact - 1.0).abs() < 1e-3, "k {k} n {n}: {num} vs {exact}");
        }
    }
    assert!((grad_norm_closed_form(1, 3) - (4.0 * PI).cbrt()).abs() < 1e-12);
    assert!((grad_norm_closed_form(8, 3) / grad_norm_closed_form(1, 3) - 2.0).abs() < 1e-12);
    assert!((grad_norm_closed_form(1, 2) - (2.0 * PI).sqrt()).abs() < 1e-12);
    assert!(grad_norm_ln(1, 4, &quad()).is_err());
}

#[test]
fn test_function_profile() {
    let phi = LogTestFunction::new(3, 3).unwrap();
    let r0 = (-3.0f64).exp() / 2.0;
    assert_eq!(phi.value(Vec3::new(0.5 * r0, 0.0, 0.0)), 3.0);
    assert!((phi.value(Vec3::new(0.0, 0.25, 0.0)) - 2f64.ln()).abs() < 1e-15);
    assert_eq!(phi.value(Vec3::new(0.0, 0.0, 0.6)), 0.0);
    assert!(LogTestFunction::new(0, 3).is_err());
}

#[test]
fn genuine_origin_singularities_grow_linearly() {
    let ks = [1, 2, 4, 8, 16];
    let cases: Vec<(Box<dyn intflux::VectorField>, f64)> = vec![
        (Box::new(coulomb_superposition(&[Singularity::new(Vec3::ZERO, 1)]).unwrap()), 1.0),
        (Box::new(coulomb_superposition(&[Singularity::new(Vec3::ZERO, -2)]).unwrap()), -2.0),
        (
            Box::new(d_field(MapDescriptor::Hedgehog { center: Vec3::ZERO, reflect: [false, true, false] }, true).unwrap()),
            -1.0,
        ),
        (
            Box::new(d_field(MapDescriptor::Hedgehog { center: Vec3::ZERO, reflect: [false; 3] }, false).unwrap()),
            4.0 * PI,
        ),
    ];
    for (field, expect) in cases {
        let rows = pairing_growth(&field, &ks, &quad()).unwrap();
        for r in rows {
            assert!((r.ratio - expect).abs() < 1e-6 * expect.abs(), "k {}: {}", r.k, r.ratio);
        }
    }
}

#[test]
fn mollified_coulomb_ratio_decays() {
    let a = 0.05;
    let f = AnalyticField::new(vec![Singularity::new(Vec3::ZERO, 1)], Background::None)
        .unwrap()
        .with_core_radius(a)
        .unwrap();
    let ks: Vec<u32> = (1..=16).collect();
    let rows = pairing_growth(&f, &ks, &quad()).unwrap();
    // flux through the sphere of radius r is min(r/a, 1)³
    let exact = |k: u32| {
        let r0 = (-(k as f64)).exp() / 2.0;
        if r0 >= a {
            k as f64
        } else {
            (1.0 - (r0 / a).powi(3)) / 3.0 + (0.5 / a).ln()
        }
    };
    for r in &rows {
        assert!((r.pairing - exact(r.k)).abs() < 1e-6, "k {}: {} vs {}", r.k, r.pairing, exact(r.k));
    }
    // beyond e^{-k}/2 < a the ratio falls monotonically
    for w in rows[2..].windows(2) {
        assert!(w[1].ratio < w[0].ratio);
    }
    assert!(rows[15].ratio < 0.2);
    let (_, table) = hoelder_bound_check(&f, 2.0, &[1, 4, 16], &quad()).unwrap();
    for r in table {
        assert!(r.pairing <= r.bound.unwrap());
    }
}

#[test]
fn coulomb_below_threshold_respects_bound() {
    let f = coulomb_superposition(&[Singularity::new(Vec3::ZERO, 1)]).unwrap();
    let (est, rows) = hoelder_bound_check(&f, 1.4, &[1, 2, 4, 8, 16], &quad()).unwrap();
    assert!(est.norm.is_finite() && est.norm > 0.0);
    for r in &rows {
        assert!(r.pairing <= r.bound.unwrap(), "k {}", r.k);
        assert!((r.ratio - 1.0).abs() < 1e-6);
    }
    // the bound grows sublinearly while the pairing grows like k
    let first = rows[0].bound.unwrap() / rows[0].pairing;
    let last = rows[4].bound.unwrap() / rows[4].pairing;
    assert!(last < first);
    match lp_norm_estimate(&f, 1.5, &quad()) {
        Err(Error::LpEstimateDivergence { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn fields_without_divergence_pair_to_zero() {
    let ks = [1, 4, 16];
    let rows = pairing_growth(&ZeroField, &ks, &quad()).unwrap();
    assert!(rows.iter().all(|r| r.pairing == 0.0 && r.ratio == 0.0));
    let (est, rows) = hoelder_bound_check(&ZeroField, 2.0, &ks, &quad()).unwrap();
    assert_eq!(est.norm, 0.0);
    assert!(rows.iter().all(|r| r.pairing == 0.0 && r.bound == Some(0.0)));
    let sol = AnalyticField::new(vec![], Background::Solenoidal { omega: Vec3::new(1.0, 0.5, -0.2) }).unwrap();
    for r in pairing_growth(&sol, &ks, &quad()).unwrap() {
        assert!(r.pairing.abs() < 1e-8);
    }
    let off = coulomb_superposition(&[Singularity::new(Vec3::new(0.1, 0.0, 0.0), 1)]).unwrap();
    assert!(matches!(pairing_growth(&off, &ks, &quad()), Err(Error::InvalidInput(_))));
}
