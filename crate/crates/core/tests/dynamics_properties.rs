mod common;

use common::{engine, random_field};
use hartree::dynamics::{evolve, evolve_observed, step_strang, EvolveConfig, Outcome, TrajectoryRecord};
use hartree::functionals::{classify, report, Region, DEFAULT_CLASSIFY_TOL};
use hartree::groundstate::{default_seed, solve_ground_state, SolverOptions};
use hartree::{make_gaussian, Error, Field, ModelParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn cubic() -> ModelParams {
    ModelParams::new(3, 3.0, 1.0).unwrap()
}

fn two_steps(field: &Field, dt: f64, params: &ModelParams, engine: &hartree::SpectralEngine) -> Field {
    let half = step_strang(field, dt / 2.0, params, engine).unwrap();
    step_strang(&half, dt / 2.0, params, engine).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn forward_then_backward_is_identity(seed in any::<u64>(), amp in 0.1f64..2.0, dt in 1e-3f64..5e-2) {
        let engine = engine(16, 8.0);
        let params = cubic();
        let field = random_field(&engine, seed, amp);
        let forward = step_strang(&field, dt, &params, &engine).unwrap();
        let back = step_strang(&forward, -dt, &params, &engine).unwrap();
        prop_assert!(back.max_abs_diff(&field) < 1e-10 * field.max_abs().max(1.0));
    }

    #[test]
    fn each_step_conserves_mass(seed in any::<u64>(), amp in 0.1f64..2.0) {
        let engine = engine(16, 8.0);
        let params = cubic();
        let field = random_field(&engine, seed, amp);
        let next = step_strang(&field, 0.01, &params, &engine).unwrap();
        prop_assert!((next.mass() - field.mass()).abs() < 1e-12 * field.mass());
    }
}

#[test]
fn local_error_is_third_order() {
    let engine = engine(32, 8.0);
    let params = cubic();
    let field = make_gaussian(*engine.grid(), 1.0, 1.0, [0.3, 0.0, -0.2]).unwrap();
    let local = |dt: f64| {
        let one = step_strang(&field, dt, &params, &engine).unwrap();
        one.max_abs_diff(&two_steps(&field, dt, &params, &engine))
    };
    let ratio = local(0.02) / local(0.01);
    assert!((ratio - 8.0).abs() < 1.0, "ratio {ratio}");
}

#[test]
fn nonfinite_state_is_reported() {
    let engine = engine(8, 4.0);
    let mut values = vec![Complex64::new(0.0, 0.0); 512];
    values[3] = Complex64::new(f64::NAN, 0.0);
    let bad = Field::new(*engine.grid(), values).unwrap();
    assert!(matches!(step_strang(&bad, 0.01, &cubic(), &engine), Err(Error::NonfiniteState(_))));
}

#[test]
fn small_gaussian_is_global_and_conservative() {
    let engine = engine(32, 8.0);
    let params = cubic();
    let field = make_gaussian(*engine.grid(), 0.05, 1.2, [0.0; 3]).unwrap();
    let config = EvolveConfig { t_end: 0.5, ..Default::default() };
    let record = evolve(&field, &params, &config, &engine).unwrap();
    assert_eq!(record.outcome, Outcome::GlobalUntilT);
    assert!(record.mass_drift < 1e-10);
    assert!(record.energy_drift < 1e-6);
    assert!(record.rows.windows(2).all(|w| w[1].t > w[0].t));
    assert!((record.rows.last().unwrap().t - 0.5).abs() < 1e-12);
}

#[test]
fn second_moment_follows_virial_law() {
    let engine = engine(32, 8.0);
    let params = cubic();
    let field = make_gaussian(*engine.grid(), 0.4, 1.0, [0.0; 3]).unwrap();
    let config = EvolveConfig { t_end: 0.4, sample_every: 10, ..Default::default() };
    let record = evolve(&field, &params, &config, &engine).unwrap();
    let rows = &record.rows;
    for i in 1..rows.len() - 1 {
        let h = rows[i + 1].t - rows[i].t;
        let g2 = (rows[i + 1].g - 2.0 * rows[i].g + rows[i - 1].g) / (h * h);
        let rel = (g2 - rows[i].eight_v).abs() / rows[i].eight_v.abs();
        assert!(rel < 1e-3, "t = {}: {g2} vs {}", rows[i].t, rows[i].eight_v);
    }
}

#[test]
fn trajectory_csv_layout() {
    let engine = engine(16, 8.0);
    let field = make_gaussian(*engine.grid(), 0.1, 1.0, [0.0; 3]).unwrap();
    let config = EvolveConfig { t_end: 0.05, ..Default::default() };
    let record: TrajectoryRecord = evolve(&field, &cubic(), &config, &engine).unwrap();
    let mut buf = Vec::new();
    record.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,mass,energy,grad_norm_sq,G,G_prime,eightV");
    assert_eq!(lines.len(), record.rows.len() + 2);
    assert_eq!(*lines.last().unwrap(), "# outcome=GLOBAL_UNTIL_T");
}

#[test]
fn ground_state_is_a_standing_wave_and_scaled_copies_split() {
    let engine = engine(32, 8.0);
    let params = cubic();
    let u = solve_ground_state(&params, &engine, &default_seed(*engine.grid()).unwrap(), &SolverOptions::new(1e-8, 3000))
        .unwrap();
    let d_n = u.functionals.lagrange;

    let config = EvolveConfig { dt: 1e-3, t_end: 2.0, sample_every: 20, blowup_factor: 3.0, ..Default::default() };
    let mut worst_modulus = 0.0f64;
    let record = evolve_observed(&u.field, &params, &config, &engine, |_, state| {
        let diff = state.values().iter().zip(u.field.values()).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max);
        worst_modulus = worst_modulus.max(diff);
        Ok(())
    })
    .unwrap();
    assert_eq!(record.outcome, Outcome::GlobalUntilT);
    assert!(worst_modulus < 1e-2 * u.field.max_abs());
    let g0 = record.rows[0].grad_norm_sq;
    assert!(record.rows.iter().all(|r| (r.grad_norm_sq / g0 - 1.0).abs() < 2e-2));

    // above the Nehari root: K, and the region persists until the detector fires
    let above = u.field.scaled(1.1);
    assert_eq!(classify(&report(&above, &params, &engine).unwrap(), d_n, DEFAULT_CLASSIFY_TOL), Region::K);
    let record = evolve(&above, &params, &EvolveConfig { t_end: 3.0, ..config }, &engine).unwrap();
    assert!(record.outcome.is_blowup(), "{}", record.outcome);
    for row in &record.rows {
        assert_eq!(classify(&row.report(&params), d_n, DEFAULT_CLASSIFY_TOL), Region::K);
    }
}
