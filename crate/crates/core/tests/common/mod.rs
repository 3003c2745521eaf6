#![allow(dead_code)]

use hartree::groundstate::localized_perturbation;
use hartree::{Field, GridSpec, SpectralEngine};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn engine(n: usize, l: f64) -> SpectralEngine {
    SpectralEngine::new(GridSpec::new(n, l).unwrap())
}

/// Smooth complex field concentrated near the origin, scaled to `amplitude`
/// in sup norm.
pub fn random_field(engine: &SpectralEngine, seed: u64, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let re = localized_perturbation(engine, &mut rng).unwrap();
    let im = localized_perturbation(engine, &mut rng).unwrap();
    let values: Vec<Complex64> = re.values().iter().zip(im.values()).map(|(a, b)| Complex64::new(a.re, b.re)).collect();
    let field = Field::new(*engine.grid(), values).unwrap();
    let scale = amplitude / field.max_abs();
    field.scaled(scale)
}

/// Real counterpart of [`random_field`].
pub fn random_real_field(engine: &SpectralEngine, seed: u64, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = localized_perturbation(engine, &mut rng).unwrap();
    let scale = amplitude / field.max_abs();
    field.scaled(scale)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
