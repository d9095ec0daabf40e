//! Shared fixtures for the criterion benches.

use intflux::regularize::CubeFaceData;
use intflux::{Cube, Singularity, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n_units` unit charges of random sign at distinct random points of `B_{0.9}`.
pub fn random_instance(n_units: usize, seed: u64) -> Vec<Singularity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_units)
        .map(|_| {
            let p = loop {
                let p = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if p.norm() < 1.0 {
                    break p * 0.9;
                }
            };
            Singularity::new(p, if rng.gen_bool(0.5) { 1 } else { -1 })
        })
        .collect()
}

/// Random face data with zero total on an `n × n` per-face mesh.
pub fn random_zero_total(cube: Cube, n: usize, seed: u64) -> CubeFaceData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..6 * n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    CubeFaceData::from_cell_vector(cube, n, &v).expect("length matches")
}
