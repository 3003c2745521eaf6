mod common;

use common::{engine, random_field, random_real_field, rel_err};
use hartree::functionals::{
    apply_scaling, aux_l1, aux_l2, classify, lambda_derivative_check, nehari_lambda, nehari_lambda_from_parts, parts,
    report, scaled_functionals, scaled_parts, v_zero_lambda_from_parts, DerivativeKind, Parts, Region, ScalingKind,
    DEFAULT_CLASSIFY_TOL,
};
use hartree::{make_gaussian, Error, ModelParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn params(p: f64, omega: f64) -> ModelParams {
    ModelParams::new(3, p, omega).unwrap()
}

fn random_parts() -> impl Strategy<Value = Parts> {
    (1e-3f64..10.0, 1e-3f64..10.0, 1e-3f64..10.0, 1e-3f64..10.0)
        .prop_map(|(kinetic, mass, lp, hartree)| Parts { kinetic, mass, lp, hartree })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn virial_algebra_holds_on_fields(seed in any::<u64>(), amp in 0.05f64..3.0, p in 2.34f64..4.99) {
        let engine = engine(16, 8.0);
        let params = params(p, 1.0);
        let r = report(&random_field(&engine, seed, amp), &params, &engine).unwrap();
        let d = 3.0;
        let lhs = 16.0 * r.energy + (16.0 - 4.0 * d * (p - 1.0)) / (p + 1.0) * r.lp;
        prop_assert!(rel_err(lhs, 8.0 * r.vfunc) < 1e-12 || (lhs - 8.0 * r.vfunc).abs() < 1e-12 * r.kinetic);
    }

    #[test]
    fn lagrange_decompositions(seed in any::<u64>(), amp in 0.05f64..3.0, p in 1.5f64..4.99) {
        let engine = engine(16, 8.0);
        let params = params(p, 0.7);
        let r = report(&random_field(&engine, seed, amp), &params, &engine).unwrap();
        let scale = r.big_k + r.lp + r.hartree;
        prop_assert!((r.lagrange - (r.nehari / 4.0 + aux_l1(&r, &params))).abs() < 1e-12 * scale);
        prop_assert!((r.lagrange - (r.nehari / (p + 1.0) + aux_l2(&r, &params))).abs() < 1e-12 * scale);
    }

    #[test]
    fn global_phase_leaves_report_unchanged(seed in any::<u64>(), amp in 0.05f64..3.0, theta in 0.0f64..std::f64::consts::TAU) {
        let engine = engine(16, 8.0);
        let params = params(3.0, 1.0);
        let field = random_field(&engine, seed, amp);
        let rotated = field.map(|z| z * Complex64::from_polar(1.0, theta));
        let a = report(&field, &params, &engine).unwrap();
        let b = report(&rotated, &params, &engine).unwrap();
        for (x, y) in [(a.mass, b.mass), (a.kinetic, b.kinetic), (a.lp, b.lp), (a.hartree, b.hartree)] {
            prop_assert!(rel_err(y, x) < 1e-12);
        }
        prop_assert_eq!(classify(&a, 1.3, DEFAULT_CLASSIFY_TOL), classify(&b, 1.3, DEFAULT_CLASSIFY_TOL));
    }

    #[test]
    fn nehari_map_changes_sign_once(parts in random_parts(), p in 1.2f64..4.99, omega in 0.1f64..3.0) {
        let params = params(p, omega);
        let mut changes = 0;
        let mut last = None;
        for i in 0..1000 {
            let lam = 10f64.powf(-3.0 + 6.0 * i as f64 / 999.0);
            let n = parts.amplitude_scaled(lam, p).nehari(&params) / (lam * lam);
            let sign = n > 0.0;
            if last.is_some_and(|s| s != sign) {
                changes += 1;
            }
            last = Some(sign);
        }
        prop_assert_eq!(changes, 1);
        let root = nehari_lambda_from_parts(&parts, &params).unwrap();
        let at = parts.amplitude_scaled(root, p);
        prop_assert!(at.nehari(&params).abs() <= 1e-12 * at.big_k(&params));
    }

    #[test]
    fn derivative_identities(parts in random_parts(), p in 2.34f64..4.99, lam in 0.2f64..3.0) {
        let params = params(p, 1.0);
        for kind in [DerivativeKind::Amplitude, DerivativeKind::MassDilation] {
            let (lhs, rhs) = lambda_derivative_check(&parts, kind, lam, &params);
            prop_assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()), "{kind:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn regions_partition_the_sublevel_set(parts in random_parts(), d_n in 0.1f64..50.0) {
        let params = params(3.0, 1.0);
        let r = hartree::functionals::FunctionalReport::from_parts(&parts, &params);
        let region = classify(&r, d_n, DEFAULT_CLASSIFY_TOL);
        if r.lagrange < d_n - DEFAULT_CLASSIFY_TOL {
            prop_assert!(matches!(region, Region::K | Region::KPlus | Region::RPlus | Region::Boundary));
            match region {
                Region::K => prop_assert!(r.nehari < 0.0 && r.vfunc < 0.0),
                Region::KPlus => prop_assert!(r.nehari < 0.0 && r.vfunc > 0.0),
                Region::RPlus => prop_assert!(r.nehari > 0.0),
                _ => {}
            }
        } else {
            prop_assert_eq!(region, Region::OutsideSublevel);
        }
    }
}

#[test]
fn zero_field_report_is_zero() {
    let engine = engine(16, 8.0);
    let params = params(3.0, 1.0);
    let r = report(&hartree::Field::zeros(*engine.grid()), &params, &engine).unwrap();
    for v in [r.mass, r.kinetic, r.lp, r.hartree, r.energy, r.big_k, r.lagrange, r.nehari, r.vfunc] {
        assert_eq!(v, 0.0);
    }
    assert_eq!(aux_l1(&r, &params), 0.0);
    assert_eq!(hartree::functionals::pohozaev_residual(&r, &params), 0.0);
}

#[test]
fn omega_zero_makes_big_k_kinetic() {
    let engine = engine(16, 8.0);
    let r = report(&random_real_field(&engine, 5, 1.0), &params(3.0, 0.0), &engine).unwrap();
    assert_eq!(r.big_k, r.kinetic);
}

#[test]
fn l1_reduces_to_quarter_k_at_cubic_power() {
    let engine = engine(16, 8.0);
    let params = params(3.0, 1.0);
    let r = report(&random_field(&engine, 9, 1.5), &params, &engine).unwrap();
    assert_eq!(aux_l1(&r, &params), r.big_k / 4.0);
}

#[test]
fn nehari_root_matches_dense_scan() {
    let engine = engine(32, 8.0);
    let params = params(2.5, 1.0);
    let field = make_gaussian(*engine.grid(), 1.3, 1.1, [0.0; 3]).unwrap();
    let root = nehari_lambda(&field, &params, &engine).unwrap();
    let base = parts(&field, &params, &engine).unwrap();
    let grid: Vec<f64> = (0..=100_000).map(|i| 1e-3 + i as f64 * 1e-4).collect();
    let cross = grid
        .windows(2)
        .find(|w| base.amplitude_scaled(w[0], 2.5).nehari(&params) > 0.0 && base.amplitude_scaled(w[1], 2.5).nehari(&params) <= 0.0)
        .expect("sign change inside the scan");
    assert!(cross[0] <= root && root <= cross[1], "root {root} outside {cross:?}");
}

#[test]
fn nehari_root_special_cases() {
    let params = params(3.0, 1.0);
    let on = Parts { kinetic: 2.0, mass: 1.0, lp: 1.5, hartree: 1.5 };
    assert!((nehari_lambda_from_parts(&on, &params).unwrap() - 1.0).abs() < 1e-12);
    let hartree_only = Parts { kinetic: 3.0, mass: 1.0, lp: 0.0, hartree: 2.0 };
    let expected = (4.0f64 / 2.0).sqrt();
    assert!((nehari_lambda_from_parts(&hartree_only, &params).unwrap() - expected).abs() < 1e-12);
    let none = Parts { kinetic: 3.0, mass: 1.0, lp: 0.0, hartree: 0.0 };
    assert!(matches!(nehari_lambda_from_parts(&none, &params), Err(Error::DegenerateField(_))));
}

#[test]
fn v_zero_root_matches_scan() {
    let params = params(3.0, 1.0);
    let parts = Parts { kinetic: 4.0, mass: 2.0, lp: 3.0, hartree: 1.0 };
    let root = v_zero_lambda_from_parts(&parts, &params, 0.0).unwrap().unwrap();
    let v = |lam: f64| scaled_functionals(&parts, ScalingKind::MassDilation, lam, &params).2;
    let mut prev = v(1e-3);
    let mut bracket = None;
    for i in 1..=200_000 {
        let lam = 1e-3 + i as f64 * 5e-5;
        let cur = v(lam);
        if prev > 0.0 && cur <= 0.0 {
            bracket = Some((lam - 5e-5, lam));
            break;
        }
        prev = cur;
    }
    let (lo, hi) = bracket.expect("sign change");
    assert!(lo <= root && root <= hi);

    let unbalanced = Parts { kinetic: 1.0, mass: 1.0, lp: 1.0, hartree: 3.0 };
    assert_eq!(v_zero_lambda_from_parts(&unbalanced, &params, 0.0).unwrap(), None);

    // at p = 7/3 the lp coefficient of V is 3/5
    let critical = ModelParams::new(3, 1.0 + 4.0 / 3.0, 1.0).unwrap();
    let flat = Parts { kinetic: 1.0, mass: 1.0, lp: 1.0, hartree: 0.8 };
    assert_eq!(v_zero_lambda_from_parts(&flat, &critical, 1e-9).unwrap(), Some(1.0));
    let tilted = Parts { kinetic: 2.0, ..flat };
    assert_eq!(v_zero_lambda_from_parts(&tilted, &critical, 1e-9).unwrap(), None);
}

#[test]
fn scaling_preserves_mass_and_lp() {
    let engine = engine(64, 8.0);
    let params = params(3.0, 1.0);
    let field = make_gaussian(*engine.grid(), 1.0, 1.2, [0.0; 3]).unwrap();
    let mass = field.mass();
    let lp = hartree::functionals::lebesgue_integral(&field, 4.0);
    for lam in [0.75, 1.0, 1.3, 2.0] {
        let u = apply_scaling(&field, ScalingKind::MassDilation, lam, &params, &engine).unwrap();
        assert!(rel_err(u.mass(), mass) < 1e-8, "mass at {lam}: {}", u.mass());
        let v = apply_scaling(&field, ScalingKind::LpDilation, lam, &params, &engine).unwrap();
        let lp_v = hartree::functionals::lebesgue_integral(&v, 4.0);
        assert!(rel_err(lp_v, lp) < 1e-8, "lp at {lam}: {lp_v}");
    }
}

#[test]
fn scaling_identity_and_errors() {
    let engine = engine(32, 8.0);
    let params = params(3.0, 1.0);
    let field = make_gaussian(*engine.grid(), 1.0, 1.0, [0.0; 3]).unwrap();
    for kind in [ScalingKind::Amplitude, ScalingKind::MassDilation, ScalingKind::LpDilation, ScalingKind::H1Dilation] {
        let same = apply_scaling(&field, kind, 1.0, &params, &engine).unwrap();
        assert!(same.max_abs_diff(&field) < 1e-12);
        assert!(matches!(apply_scaling(&field, kind, 0.0, &params, &engine), Err(Error::NonpositiveLambda(_))));
    }
    // expanding by 4 pushes the mass past the support margin
    assert!(matches!(
        apply_scaling(&field, ScalingKind::MassDilation, 0.25, &params, &engine),
        Err(Error::SupportViolation(_))
    ));
}

#[test]
fn analytic_scaling_matches_resampling() {
    let engine = engine(64, 8.0);
    let params = params(3.0, 1.0);
    let field = make_gaussian(*engine.grid(), 1.1, 1.2, [0.0; 3]).unwrap();
    let base = parts(&field, &params, &engine).unwrap();
    for kind in [ScalingKind::MassDilation, ScalingKind::LpDilation, ScalingKind::H1Dilation] {
        for lam in [0.8, 1.25, 2.0] {
            let scaled = apply_scaling(&field, kind, lam, &params, &engine).unwrap();
            let direct = report(&scaled, &params, &engine).unwrap();
            let (l, n, v) = scaled_functionals(&base, kind, lam, &params);
            let s = scaled_parts(&base, kind, lam, &params);
            let scale = s.big_k(&params) + s.lp + s.hartree;
            for (a, b, name) in [(direct.lagrange, l, "L"), (direct.nehari, n, "N"), (direct.vfunc, v, "V")] {
                assert!((a - b).abs() <= 1e-6 * scale, "{kind:?} lambda {lam} {name}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn mass_dilation_lp_exponent_at_cubic_power() {
    let params = params(3.0, 1.0);
    assert_eq!(ScalingKind::MassDilation.powers(&params)[2], 3.0);
    let lp_powers = ScalingKind::LpDilation.powers(&params);
    let d = 3.0;
    let p = 3.0;
    let expected = [2.0 * d / (p + 1.0) + 2.0 - d, 2.0 * d / (p + 1.0) - d, 0.0, 4.0 * d / (p + 1.0) - 2.0 * d + 2.0];
    for (a, b) in lp_powers.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn classify_examples() {
    let engine = engine(32, 8.0);
    let params = params(3.0, 1.0);
    let tiny = make_gaussian(*engine.grid(), 1e-3, 1.0, [0.0; 3]).unwrap();
    let r = report(&tiny, &params, &engine).unwrap();
    assert_eq!(classify(&r, 1.0, DEFAULT_CLASSIFY_TOL), Region::RPlus);
    let moderate = make_gaussian(*engine.grid(), 0.3, 1.5, [0.0; 3]).unwrap();
    let r = report(&moderate, &params, &engine).unwrap();
    assert!(r.lagrange > 0.0);
    assert_eq!(classify(&r, r.lagrange * 0.5, DEFAULT_CLASSIFY_TOL), Region::OutsideSublevel);
}
