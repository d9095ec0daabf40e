use intflux::decomp::{build_lattice, classify, decompose, SelectOptions};
use intflux::field::{coulomb_superposition, FnField, ZeroField};
use intflux::flux::{cube_flux, integer_flux_scan};
use intflux::regularize::{
    approximation_error, assemble, gauge_fix, harmonic_extend, harmonic_extend_with, radial_extend,
    smooth_skeleton, AssembleOptions, Boundary1Form, CubeFaceData, ErrorRegion, ExtensionKind, FaceForm,
    HarmonicOptions, SurfaceMesh,
};
use intflux::{Cube, QuadratureSpec, Singularity, Vec3, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn random_cube(rng: &mut ChaCha8Rng) -> Cube {
    let c = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
    Cube::new(c, rng.gen_range(0.1..0.4))
}

fn random_data(cube: Cube, n: usize, rng: &mut ChaCha8Rng) -> CubeFaceData {
    let faces = std::array::from_fn(|_| (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    CubeFaceData::new(cube, n, faces).unwrap()
}

fn zero_total(mut d: CubeFaceData) -> CubeFaceData {
    let shift = d.total() / (6 * d.n * d.n) as f64;
    d.faces.iter_mut().flatten().for_each(|v| *v -= shift);
    d
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn gauge_round_trip_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for _ in 0..20 {
        let cube = random_cube(&mut rng);
        let n = rng.gen_range(3..10);
        let data = zero_total(random_data(cube, n, &mut rng));
        let alpha = gauge_fix(&data, 1e-9).unwrap();
        let (r1, r2) = alpha.residuals(&data);
        assert!(r1 < 1e-8 && r2 < 1e-8, "n {n}: {r1} {r2}");
    }
}

#[test]
fn gauge_recovers_exact_forms() {
    // φ = dβ for a random β; the recovered α differs from β but has the same d
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mesh = Arc::new(SurfaceMesh::new(6));
    let cube = Cube::new(Vec3::ZERO, 0.5);
    for _ in 0..5 {
        let beta: Vec<f64> = (0..mesh.edges.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = mesh.d(&beta);
        let data = CubeFaceData::from_cell_vector(cube, 6, &phi).unwrap();
        assert!(data.total().abs() < 1e-12);
        let alpha = gauge_fix(&data, 1e-9).unwrap();
        let diff: Vec<f64> = alpha.d().iter().zip(&phi).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) < 1e-8);
        assert!(norm(&alpha.codifferential()) < 1e-8);
    }
}

#[test]
fn gauge_of_zero_and_of_opposite_bumps() {
    let cube = Cube::new(Vec3::ZERO, 1.0);
    let alpha = gauge_fix(&CubeFaceData::zeros(cube, 5), 1e-9).unwrap();
    assert!(alpha.values.iter().all(|v| v.abs() < 1e-14));
    let n = 8;
    let mut data = CubeFaceData::zeros(cube, n);
    for b in 0..n {
        for a in 0..n {
            let (u, v) = (a as f64 + 0.5 - 4.0, b as f64 + 0.5 - 4.0);
            let bump = (-(u * u + v * v) / 4.0).exp();
            data.faces[1][a + n * b] = bump;
            data.faces[0][a + n * b] = -bump;
        }
    }
    let alpha = gauge_fix(&data, 1e-9).unwrap();
    let (r1, r2) = alpha.residuals(&data);
    assert!(r1 < 1e-8 && r2 < 1e-8);
    assert!(alpha.values.iter().any(|v| v.abs() > 1e-3));
}

#[test]
fn gauge_rejects_nonzero_total() {
    let cube = Cube::new(Vec3::ZERO, 1.0);
    let mut data = CubeFaceData::zeros(cube, 4);
    data.faces[3][5] = 1.0;
    assert!(gauge_fix(&data, 1e-6).is_err());
}

#[test]
fn harmonic_extension_of_linear_potential() {
    // A = (a·y + b·z, c·x + d·z, e·x + f·y) has each component harmonic and
    // constant along its own axis; curl A is constant
    let [a, b, c, d, e, f] = [0.3, -1.2, 0.7, 0.4, -0.5, 1.1];
    let pot = |x: Vec3| Vec3::new(a * x.y + b * x.z, c * x.x + d * x.z, e * x.x + f * x.y);
    let curl = Vec3::new(f - d, b - e, c - a);
    let cube = Cube::new(Vec3::new(-0.1, 0.2, 0.05), 0.4);
    let n = 8;
    let h = cube.side / n as f64;
    let corner = cube.center - Vec3::splat(cube.half());
    let mesh = Arc::new(SurfaceMesh::new(n));
    let mut alpha = Boundary1Form::zeros(mesh.clone(), cube.side);
    for (i, edge) in mesh.edges.iter().enumerate() {
        let p = corner + Vec3::new(edge.p[0] as f64, edge.p[1] as f64, edge.p[2] as f64) * h;
        let mid = p + Vec3::axis(edge.axis) * (0.5 * h);
        alpha.values[i] = pot(mid)[edge.axis] * h;
    }
    let opts = HarmonicOptions {
        solver_tol: 1e-13,
        ..Default::default()
    };
    let ext = harmonic_extend_with(&alpha, &cube, n + 1, &opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..50 {
        let x = cube.center + Vec3::new(rng.gen_range(-0.19..0.19), rng.gen_range(-0.19..0.19), rng.gen_range(-0.19..0.19));
        let v = ext.eval(x).unwrap();
        assert!((v - curl).norm() < 1e-6, "{v:?} vs {curl:?}");
    }
}

#[test]
fn constant_field_survives_gauge_and_extension() {
    let c = Vec3::new(0.2, -0.7, 0.4);
    let field = FnField(move |_| c);
    let cube = Cube::new(Vec3::new(0.1, 0.1, -0.2), 0.25);
    let n = 8;
    let data = CubeFaceData::from_field(&field, cube, n, &QuadratureSpec::gauss(4)).unwrap();
    let alpha = gauge_fix(&data, 1e-9).unwrap();
    let ext = harmonic_extend(&alpha, &cube, n + 1).unwrap();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = ext.grid.cell_value([i, j, k]);
                assert!((v - c).norm() < 1e-6, "{v:?}");
            }
        }
    }
}

#[test]
fn maximum_principle_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..20 {
        let cube = random_cube(&mut rng);
        let m = rng.gen_range(6..12);
        let data = zero_total(random_data(cube, m - 1, &mut rng));
        let alpha = gauge_fix(&data, 1e-9).unwrap();
        let ext = harmonic_extend(&alpha, &cube, m).unwrap();
        let scale = ext
            .data_range
            .unwrap()
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max);
        assert!(ext.max_principle_violation() <= 1e-8 * scale, "{}", ext.max_principle_violation());
        assert!(ext.laplace_residual(&Default::default()) <= 1e-6 * scale);
    }
}

/// `‖dA‖_{L²(Q)} / ‖ρ‖_{L²(∂Q)}` for a fixed boundary density pattern on a cube of side `r`.
fn elliptic_ratio(pattern: &[f64], n: usize, r: f64) -> f64 {
    let cube = Cube::new(Vec3::new(0.05, -0.1, 0.02), r);
    let h = r / n as f64;
    // same density pattern on every scale
    let cells: Vec<f64> = pattern.iter().map(|v| v * h * h).collect();
    let data = CubeFaceData::from_cell_vector(cube, n, &cells).unwrap();
    let alpha = gauge_fix(&data, 1e-9).unwrap();
    let ext = harmonic_extend(&alpha, &cube, n + 1).unwrap();
    let density = pattern.iter().map(|v| v * v * h * h).sum::<f64>().sqrt();
    ext.field_lq_norm(2.0) / density
}

#[test]
fn elliptic_scaling_is_r_to_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let n = 8;
    let data = zero_total(random_data(Cube::new(Vec3::ZERO, 1.0), n, &mut rng));
    let pattern = data.cell_vector();
    let scaled: Vec<f64> = [0.5, 0.25, 0.125]
        .iter()
        .map(|&r| elliptic_ratio(&pattern, n, r) / r.sqrt())
        .collect();
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(lo > 0.0 && hi / lo <= 2.0, "{scaled:?}");
}

#[test]
fn radial_subcube_fluxes_are_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..10 {
        let cube = random_cube(&mut rng);
        let n = rng.gen_range(2..7);
        let mut data = random_data(cube, n, &mut rng);
        let deg = [-2i64, -1, 1, 2, 3][rng.gen_range(0..5)];
        let shift = (data.total() - deg as f64) / (6 * n * n) as f64;
        data.faces.iter_mut().flatten().for_each(|v| *v -= shift);
        let ext = radial_extend(&data, 9, 1.0, 1e-9).unwrap();
        assert_eq!(ext.kind, ExtensionKind::Radial);
        assert_eq!(ext.degree, deg);
        // scaled data cells are aligned with a 4n midpoint grid
        let quad = QuadratureSpec::midpoint(4 * n);
        for s in [0.2, 0.4, 0.6, 0.8] {
            let f = cube_flux(&ext, &Cube::new(cube.center, s * cube.side), &quad).unwrap();
            assert!((f - deg as f64).abs() < 1e-6, "scale {s}: {f} vs {deg}");
        }
        let twice = radial_extend(&data.scaled(2.0), 9, 1.0, 1e-9).unwrap();
        let x = cube.center + Vec3::new(0.3, -0.1, 0.2) * cube.half();
        let (a, b) = (ext.eval(x).unwrap(), twice.eval(x).unwrap());
        assert!((b - a * 2.0).norm() < 1e-12 * (1.0 + a.norm()));
    }
}

#[test]
fn radial_extension_of_centered_coulomb() {
    let cube = Cube::new(Vec3::new(0.1, -0.1, 0.0), 0.3);
    let f = coulomb_superposition(&[Singularity::new(cube.center, 1)]).unwrap();
    let data = CubeFaceData::from_field(&f, cube, 6, &QuadratureSpec::gauss(8)).unwrap();
    let ext = radial_extend(&data, 9, 1.0, 1e-6).unwrap();
    for s in [0.2, 0.5, 0.9] {
        let flux = cube_flux(&ext, &Cube::new(cube.center, s * cube.side), &QuadratureSpec::midpoint(24)).unwrap();
        assert!((flux - 1.0).abs() < 1e-6);
    }
}

fn random_faceform(rng: &mut ChaCha8Rng) -> FaceForm {
    let eps = [0.25, 0.2, 0.125][rng.gen_range(0..3)];
    let a = Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)) * eps;
    let lattice = build_lattice(eps, a).unwrap();
    let mut ff = FaceForm::zeros(&lattice, rng.gen_range(4..12)).unwrap();
    for face in &mut ff.faces {
        // mixed signs and a few all-zero faces exercise the additive path
        let kind = rng.gen_range(0..4);
        for v in &mut face.cells {
            *v = match kind {
                0 => 0.0,
                1 => rng.gen_range(0.0..1.0),
                _ => rng.gen_range(-1.0..1.0),
            };
        }
        face.total = face.cells.iter().sum();
    }
    ff
}

#[test]
fn smoothing_keeps_cube_totals_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for _ in 0..20 {
        let ff = random_faceform(&mut rng);
        let delta = ff.lattice.eps / rng.gen_range(4.5..20.0);
        let (smooth, _) = smooth_skeleton(&ff, delta).unwrap();
        let before = ff.cube_totals();
        let after = smooth.cube_totals();
        assert!(before.iter().zip(&after).all(|(a, b)| a.to_bits() == b.to_bits()));
        for (f, g) in ff.faces.iter().zip(&smooth.faces) {
            let s: f64 = g.cells.iter().sum();
            assert!((s - f.total).abs() <= 1e-12 * (1.0 + f.total.abs()));
        }
    }
}

#[test]
fn smoothing_a_bump_converges() {
    let lattice = build_lattice(0.25, Vec3::ZERO).unwrap();
    let n = 32;
    let mut ff = FaceForm::zeros(&lattice, n).unwrap();
    let face = &mut ff.faces[0];
    for b in 0..n {
        for a in 0..n {
            let (u, v) = ((a as f64 + 0.5) / n as f64 - 0.5, (b as f64 + 0.5) / n as f64 - 0.5);
            face.cells[a + n * b] = (-(u * u + v * v) / 0.02).exp();
        }
    }
    face.total = face.cells.iter().sum();
    let errs: Vec<f64> = [0.06, 0.03, 0.015]
        .iter()
        .map(|&d| {
            let (s, _) = smooth_skeleton(&ff, d).unwrap();
            let diff: Vec<f64> = s.faces[0].cells.iter().zip(&ff.faces[0].cells).map(|(x, y)| x - y).collect();
            norm(&diff)
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    // constant data is a fixed point
    let mut flat = FaceForm::zeros(&lattice, 8).unwrap();
    for f in &mut flat.faces {
        f.cells.iter_mut().for_each(|v| *v = 0.25);
        f.total = 16.0;
    }
    let (s, rep) = smooth_skeleton(&flat, 0.05).unwrap();
    assert!(rep.additive_faces.is_empty());
    assert!(s.faces.iter().flat_map(|f| &f.cells).all(|v| (v - 0.25).abs() < 1e-15));
}

fn abc_flow() -> impl VectorField {
    FnField(|x: Vec3| {
        let k = 2.0;
        Vec3::new(
            (k * x.z).sin() + 0.5 * (k * x.y).cos(),
            0.8 * (k * x.x).sin() + (k * x.z).cos(),
            0.6 * (k * x.y).sin() + 0.9 * (k * x.x).cos(),
        )
    })
}

fn plain_decomposition(field: &dyn VectorField, eps: f64, a: Vec3) -> intflux::decomp::CubeDecomposition {
    classify(field, &build_lattice(eps, a).unwrap(), &QuadratureSpec::gauss(8), 1e-6).unwrap()
}

#[test]
fn divergence_free_field_assembles_close() {
    let f = abc_flow();
    let dec = plain_decomposition(&f, 0.25, Vec3::new(0.013, -0.021, 0.008));
    assert_eq!(dec.n_bad(), 0);
    let reg = assemble(&f, &dec, &AssembleOptions::default()).unwrap();
    assert!(reg.singularities.is_empty());
    let err = approximation_error(&f, &reg, 2.0, 1.0 / 32.0, reg.region()).unwrap();
    let size = approximation_error(&f, &ZeroField, 2.0, 1.0 / 32.0, reg.region()).unwrap();
    assert!(err / size < 0.15, "relative error {}", err / size);
}

#[test]
fn coulomb_assembles_to_one_singularity() {
    let f = coulomb_superposition(&[Singularity::new(Vec3::ZERO, 1)]).unwrap();
    let quad = QuadratureSpec::gauss(16);
    let (dec, _, _) = decompose(&f, 0.25, 16, &quad, 3, &SelectOptions::default(), 1e-6).unwrap();
    let reg = assemble(&f, &dec, &AssembleOptions::default()).unwrap();
    assert_eq!(reg.singularities.len(), 1);
    let s = reg.singularities[0];
    assert_eq!(s.degree, 1);
    let bad = dec.bad_indices();
    assert_eq!(s.position, dec.lattice.sites[bad[0]]);
    let scan = integer_flux_scan(&reg, 100, 10, 1e-3, &quad, 5).unwrap();
    assert_eq!(scan.summary.violations, 0, "{:?}", scan.summary);
    assert!(scan.summary.evaluated > 100);
    // the radial cube keeps its degree on concentric sub-cubes
    let d = reg.diagnostics.iter().find(|d| d.kind == ExtensionKind::Radial).unwrap();
    assert!(d.subcube_flux_error.unwrap() < 1e-6);
}

#[test]
fn zero_field_assembles_to_zero() {
    let dec = plain_decomposition(&ZeroField, 0.2, Vec3::new(0.05, 0.0, -0.02));
    let reg = assemble(&ZeroField, &dec, &AssembleOptions::default()).unwrap();
    assert!(reg.singularities.is_empty());
    assert!(reg.grid.flux.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn good_cubes_patch_across_shared_faces() {
    let f = abc_flow();
    let opts = AssembleOptions {
        mollify: false,
        ..Default::default()
    };
    let dec = plain_decomposition(&f, 0.2, Vec3::new(-0.03, 0.04, 0.011));
    let reg = assemble(&f, &dec, &opts).unwrap();
    for d in &reg.diagnostics {
        assert_eq!(d.kind, ExtensionKind::Harmonic);
        assert!(d.boundary_mismatch < 2e-8, "cube {}: {}", d.cube, d.boundary_mismatch);
    }
    // without mollification the assembled grid is divergence free in every cell
    let n = reg.grid.n;
    let mut worst: f64 = 0.0;
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                worst = worst.max(reg.grid.divergence([i, j, k]).abs());
            }
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn coulomb_error_decreases_with_eps() {
    let f = coulomb_superposition(&[Singularity::new(Vec3::ZERO, 1)]).unwrap();
    let quad = QuadratureSpec::gauss(16);
    let errs: Vec<f64> = [0.25, 0.125]
        .iter()
        .map(|&eps| {
            let (dec, _, _) = decompose(&f, eps, 16, &quad, 9, &SelectOptions::default(), 1e-6).unwrap();
            let reg = assemble(&f, &dec, &AssembleOptions::default()).unwrap();
            approximation_error(&f, &reg, 1.0, 1.0 / 32.0, ErrorRegion::Ball).unwrap()
        })
        .collect();
    assert!(errs[1] < errs[0], "{errs:?}");
}
