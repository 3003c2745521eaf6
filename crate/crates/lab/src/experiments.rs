//! One runner per subcommand. Each reads an [`ExperimentConfig`], writes its
//! CSV files and SVG plots into the output directory and returns a [`Report`]
//! of named checks; asserted checks that fail make the run fail.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use hartree::dynamics::{evolve, evolve_observed, EvolveConfig, Outcome, TrajectoryRecord};
use hartree::functionals::{
    classify, gn_ratio_hartree, gn_ratio_power, pohozaev_residual, report, GnConstants, Region, DEFAULT_CLASSIFY_TOL,
};
use hartree::groundstate::{
    estimate_d_n, localized_perturbation, sample_d_manifold, solve_mass_constrained, solve_r, solve_w, default_seed,
    standing_wave_frequency, GaussianSeed, GroundState, SolverOptions,
};
use hartree::{io, make_gaussian, Field, GridSpec, ModelParams, SpectralEngine};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, KeySpec};
use crate::error::{FailureKind, LabError, LabResult};
use crate::orbit::{h1_distance, h1_norm_sq, orbit_distance};
use crate::plot::{histogram, xy_plot, Series};

pub const SUBCOMMANDS: &[&str] =
    &["groundstate", "evolve", "classify", "gn-verify", "compare-dnm", "dichotomy", "instability", "orbit-stability"];

/// Accepted and required keys of `subcommand`.
pub fn key_spec(subcommand: &str) -> Option<KeySpec> {
    let spec = match subcommand {
        "groundstate" => KeySpec {
            required: &["n", "L"],
            optional: &["D", "p", "omega", "equation", "q", "mass", "seed_widths", "tol", "max_iter"],
        },
        "evolve" => KeySpec {
            required: &["p", "n", "L", "dt", "t_end"],
            optional: &[
                "D", "omega", "initial", "amplitude", "width", "lambda", "seed_widths", "tol", "max_iter", "F",
                "sample_every", "dt_min", "hartree_mode",
            ],
        },
        "classify" => KeySpec {
            required: &["p", "n", "L"],
            optional: &["D", "omega", "widths", "lambda_max", "lambda_points", "seed_widths", "tol", "max_iter"],
        },
        "gn-verify" => KeySpec { required: &["n", "L"], optional: &["q", "n_probes", "tol", "max_iter"] },
        "compare-dnm" => KeySpec {
            required: &["p", "n", "L"],
            optional: &["D", "omega", "n_samples", "margin", "seed_widths", "tol", "max_iter"],
        },
        "dichotomy" => KeySpec {
            required: &["p", "n", "L", "dt", "t_end"],
            optional: &[
                "D", "omega", "lambdas", "gaussian_amplitudes", "gaussian_widths", "growth_bound", "seed_widths",
                "tol", "max_iter", "F", "sample_every", "dt_min", "hartree_mode",
            ],
        },
        "instability" => KeySpec {
            required: &["p", "n", "L", "dt", "t_end"],
            optional: &[
                "D", "omega", "lambdas", "control", "seed_widths", "tol", "max_iter", "F", "sample_every", "dt_min",
                "hartree_mode",
            ],
        },
        "orbit-stability" => KeySpec {
            required: &["p", "n", "L", "dt", "t_end"],
            optional: &[
                "D", "mass", "mass_fraction", "deltas", "epsilon_factor", "control_tol", "w_n", "w_L", "w_tol",
                "tail_tolerance", "tol", "max_iter", "sample_every", "hartree_mode",
            ],
        },
        _ => return None,
    };
    Some(spec)
}

/// One named quantity compared against a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Only asserted checks decide the exit code.
    pub asserted: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub subcommand: String,
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    pub failure_kind: FailureKind,
}

impl Report {
    fn new(subcommand: &str, failure_kind: FailureKind) -> Self {
        Self { subcommand: subcommand.into(), checks: Vec::new(), failures: Vec::new(), failure_kind }
    }

    /// Records `value <= threshold`.
    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64, asserted: bool) {
        self.push(name.into(), value, threshold, value <= threshold, asserted);
    }

    /// Records `value >= threshold`.
    fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64, asserted: bool) {
        self.push(name.into(), value, threshold, value >= threshold, asserted);
    }

    fn flag(&mut self, name: impl Into<String>, pass: bool, asserted: bool) {
        self.push(name.into(), if pass { 1.0 } else { 0.0 }, 1.0, pass, asserted);
    }

    fn info(&mut self, name: impl Into<String>, value: f64) {
        self.push(name.into(), value, f64::NAN, true, false);
    }

    fn push(&mut self, name: String, value: f64, threshold: f64, pass: bool, asserted: bool) {
        if asserted && !pass {
            self.failures.push(format!("{name}={value} threshold={threshold}"));
        }
        self.checks.push(Check { name, value, threshold, pass, asserted });
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `subcommand,check,value,threshold,asserted,pass`
    pub fn write_summary(&self, dir: &Path) -> LabResult<()> {
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        w.write_record(["subcommand", "check", "value", "threshold", "asserted", "pass"])?;
        for c in &self.checks {
            w.write_record([
                self.subcommand.clone(),
                c.name.clone(),
                num(c.value),
                num(c.threshold),
                c.asserted.to_string(),
                c.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `Err(Failed)` when any asserted check failed.
    pub fn into_result(self) -> LabResult<Report> {
        if self.passed() {
            Ok(self)
        } else {
            Err(LabError::Failed { kind: self.failure_kind, failures: self.failures })
        }
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.12e}")
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> LabResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `subcommand` with outputs in `out`, after validating the keys.
pub fn run(subcommand: &str, config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let spec = key_spec(subcommand).ok_or_else(|| LabError::Config(format!("unknown subcommand {subcommand:?}")))?;
    config.validate(&spec)?;
    fs::create_dir_all(out)?;
    let report = match subcommand {
        "groundstate" => run_groundstate(config, out),
        "evolve" => run_evolve(config, out),
        "classify" => run_classify(config, out),
        "gn-verify" => run_gn_verify(config, out),
        "compare-dnm" => run_compare_dnm(config, out),
        "dichotomy" => run_dichotomy(config, out),
        "instability" => run_instability(config, out),
        _ => run_orbit_stability(config, out),
    }?;
    report.write_summary(out)?;
    report.into_result()
}

/// Output directory: `output_dir` from the config, else `default`.
pub fn output_dir(config: &ExperimentConfig, default: &Path) -> LabResult<PathBuf> {
    Ok(if config.contains("output_dir") { PathBuf::from(config.get::<String>("output_dir")?) } else { default.to_path_buf() })
}

fn rng_seed(config: &ExperimentConfig) -> LabResult<u64> {
    config.get_or("rng_seed", 0)
}

fn solver_options(config: &ExperimentConfig) -> LabResult<SolverOptions> {
    Ok(SolverOptions::new(config.get_or("tol", 1e-8)?, config.get_or("max_iter", 3000)?))
}

fn evolve_config(config: &ExperimentConfig) -> LabResult<EvolveConfig> {
    let defaults = EvolveConfig::default();
    let cfg = EvolveConfig {
        dt: config.get("dt")?,
        t_end: config.get("t_end")?,
        sample_every: config.get_or("sample_every", defaults.sample_every)?,
        blowup_factor: config.get_or("F", defaults.blowup_factor)?,
        dt_min: config.get_or("dt_min", defaults.dt_min)?,
        hartree_mode: config.hartree_mode()?,
    };
    cfg.validate().map_err(|e| LabError::Config(e.to_string()))?;
    Ok(cfg)
}

fn engine_for(grid: GridSpec) -> SpectralEngine {
    SpectralEngine::new(grid)
}

/// Standing-wave ground state from Gaussian seeds of unit amplitude.
fn ground_state(config: &ExperimentConfig, params: &ModelParams, engine: &SpectralEngine) -> LabResult<GroundState> {
    let widths: Vec<f64> = config.list_or("seed_widths", &[1.0])?;
    let seeds: Vec<GaussianSeed> = widths.iter().map(|&width| GaussianSeed { amplitude: 1.0, width }).collect();
    let (_, state) = estimate_d_n(params, engine, &seeds, &solver_options(config)?)?;
    Ok(state)
}

pub fn run_groundstate(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let engine = engine_for(config.grid()?);
    let options = solver_options(config)?;
    let equation: String = config.get_or("equation", "standing_wave".to_string())?;
    let seed = default_seed(*engine.grid())?;
    let mut rep = Report::new("groundstate", FailureKind::Concordance);
    let state = match equation.as_str() {
        "standing_wave" => {
            config.require(&["p"])?;
            let params = config.model()?;
            let state = ground_state(config, &params, &engine)?;
            let f = &state.functionals;
            rep.at_most("nehari_over_K", f.nehari.abs() / f.big_k, 1e-8, true);
            rep.at_most("pohozaev_over_K", pohozaev_residual(f, &params).abs() / f.big_k, 1e-3, true);
            rep.at_least("d_N", f.lagrange, 0.0, true);
            state
        }
        "gn_power" => solve_r(&engine, config.get_or("q", 1.0)?, &seed, &options)?,
        "gn_hartree" => solve_w(&engine, &seed, &options)?,
        "mass_constrained" => {
            config.require(&["p", "mass"])?;
            let params = config.model()?;
            let bound = solve_w(&engine, &seed, &options)?.functionals.kinetic;
            rep.info("w_grad_norm_sq", bound);
            let state = solve_mass_constrained(config.get("mass")?, bound, &params, &engine, &seed, &options)?;
            rep.info("frequency", standing_wave_frequency(&state));
            state
        }
        other => return Err(LabError::Config(format!("unknown equation {other:?}"))),
    };
    rep.at_most("residual", state.residual, 1e-6, true);
    rep.info("iterations", state.iterations as f64);
    rep.info("L", state.functionals.lagrange);

    fs::write(out.join("groundstate.csv"), format!("{}\n{}\n", GroundState::CSV_HEADER, state.csv_row()))?;
    io::save_field(&state.field, out.join("state.hfield"))?;
    let grid = *engine.grid();
    let mid = grid.n() / 2;
    let profile: Vec<(f64, f64)> =
        (0..grid.n()).map(|i| (grid.coord(i), state.field.values()[grid.index(i, mid, mid)].re)).collect();
    write_csv(&out.join("profile.csv"), &["x", "u"], profile.iter().map(|&(x, u)| vec![num(x), num(u)]))?;
    let history: Vec<(f64, f64)> = state.objective_history.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
    xy_plot(
        &out.join("convergence.svg"),
        &format!("{} objective", state.equation.label()),
        "accepted step",
        "objective",
        &[Series { label: "objective", points: history }],
        false,
    )?;
    xy_plot(&out.join("profile.svg"), "profile along x", "x", "u", &[Series { label: "u(x, 0, 0)", points: profile }], false)?;
    Ok(rep)
}

fn trajectory_plot(path: &Path, title: &str, records: &[(String, &TrajectoryRecord)]) -> LabResult<()> {
    let series: Vec<Series> = records
        .iter()
        .map(|(label, rec)| {
            let g0 = rec.rows[0].grad_norm_sq;
            Series { label, points: rec.rows.iter().map(|r| (r.t, (r.grad_norm_sq / g0).sqrt())).collect() }
        })
        .collect();
    xy_plot(path, title, "t", "||grad psi(t)|| / ||grad psi(0)||", &series, false)
}

pub fn run_evolve(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let params = config.model()?;
    let engine = engine_for(config.grid()?);
    let cfg = evolve_config(config)?;
    let initial = match config.get_or("initial", "gaussian".to_string())?.as_str() {
        "gaussian" => make_gaussian(*engine.grid(), config.get_or("amplitude", 0.5)?, config.get_or("width", 1.0)?, [0.0; 3])?,
        "ground_state" => ground_state(config, &params, &engine)?.field.scaled(config.get_or("lambda", 1.0)?),
        other => return Err(LabError::Config(format!("initial must be gaussian or ground_state, got {other:?}"))),
    };
    let record = evolve(&initial, &params, &cfg, &engine)?;
    record.write_csv(BufWriter::new(File::create(out.join("trajectory.csv"))?))?;
    trajectory_plot(&out.join("monitors.svg"), "gradient growth", &[("psi".to_string(), &record)])?;
    let virial: Vec<Series> = vec![
        Series { label: "G", points: record.rows.iter().map(|r| (r.t, r.g)).collect() },
        Series { label: "8V", points: record.rows.iter().map(|r| (r.t, r.eight_v)).collect() },
    ];
    xy_plot(&out.join("virial.svg"), "virial monitors", "t", "value", &virial, false)?;
    let mut rep = Report::new("evolve", FailureKind::Concordance);
    rep.info("mass_drift", record.mass_drift);
    rep.info("energy_drift", record.energy_drift);
    rep.info("blowup", if record.outcome.is_blowup() { 1.0 } else { 0.0 });
    rep.info("t_star", record.outcome.t_star().unwrap_or(f64::NAN));
    rep.info("max_gradient_growth", record.max_gradient_growth());
    Ok(rep)
}

fn region_rank(region: Region) -> Option<u8> {
    match region {
        Region::RPlus => Some(0),
        Region::KPlus => Some(1),
        Region::K => Some(2),
        _ => None,
    }
}

pub fn run_classify(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let params = config.model()?;
    let engine = engine_for(config.grid()?);
    let d_n = ground_state(config, &params, &engine)?.functionals.lagrange;
    let widths: Vec<f64> = config.list_or("widths", &[0.8, 1.0, 1.3])?;
    let lambda_max: f64 = config.get_or("lambda_max", 3.0)?;
    let points: usize = config.get_or("lambda_points", 61)?;
    if points < 2 || !(lambda_max > 0.0) {
        return Err(LabError::Config("need lambda_points >= 2 and lambda_max > 0".into()));
    }
    let mut rep = Report::new("classify", FailureKind::Concordance);
    rep.info("d_N", d_n);
    let mut rows = Vec::new();
    for (ray, &width) in widths.iter().enumerate() {
        let base = make_gaussian(*engine.grid(), 1.0, width, [0.0; 3])?;
        let parts = hartree::functionals::parts(&base, &params, &engine)?;
        let mut scan = [Vec::new(), Vec::new(), Vec::new()];
        let mut ranks = Vec::new();
        let mut entered_k = false;
        for i in 1..=points {
            let lambda = lambda_max * i as f64 / points as f64;
            let r = hartree::functionals::FunctionalReport::from_parts(&parts.amplitude_scaled(lambda, params.p), &params);
            let region = classify(&r, d_n, DEFAULT_CLASSIFY_TOL);
            entered_k |= region == Region::K;
            ranks.extend(region_rank(region));
            scan[0].push((lambda, r.lagrange));
            scan[1].push((lambda, r.nehari));
            scan[2].push((lambda, r.vfunc));
            rows.push(vec![ray.to_string(), num(width), num(lambda), num(r.lagrange), num(r.nehari), num(r.vfunc), region.label().into()]);
        }
        let monotone = ranks.windows(2).all(|w| w[1] >= w[0]);
        rep.flag(format!("ray_{ray}_monotone"), monotone, entered_k);
        let [l, n, v] = scan;
        xy_plot(
            &out.join(format!("scan_ray_{ray}.svg")),
            &format!("amplitude ray, width {width}"),
            "lambda",
            "functional",
            &[
                Series { label: "L", points: l },
                Series { label: "N", points: n },
                Series { label: "V", points: v },
                Series { label: "d_N", points: vec![(0.0, d_n), (lambda_max, d_n)] },
            ],
            false,
        )?;
    }
    write_csv(&out.join("classify.csv"), &["ray_id", "width", "lambda", "L", "N", "V", "region"], rows)?;
    Ok(rep)
}

fn random_probe(rng: &mut impl Rng, grid: GridSpec) -> hartree::Result<Field> {
    let amp = rng.gen_range(0.1..3.0);
    let width = rng.gen_range(0.6..1.4);
    let center = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    make_gaussian(grid, amp, width, center)
}

pub fn run_gn_verify(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let engine = engine_for(config.grid()?);
    let options = solver_options(config)?;
    let q: f64 = config.get_or("q", 1.0)?;
    let n_probes: usize = config.get_or("n_probes", 100)?;
    let seed = default_seed(*engine.grid())?;
    let w = solve_w(&engine, &seed, &options)?;
    let r = solve_r(&engine, q, &seed, &options)?;
    let hartree_constants = GnConstants::new(q, 1.0, w.functionals.kinetic)?;
    let power_constants = GnConstants::new(q, r.functionals.mass, 1.0)?;
    let w_ratio = gn_ratio_hartree(&w.field, &hartree_constants, &engine)?;
    let r_ratio = gn_ratio_power(&r.field, &power_constants, &engine)?;

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed(config)?);
    let probes: Vec<Field> = (0..n_probes).map(|_| random_probe(&mut rng, *engine.grid())).collect::<hartree::Result<_>>()?;
    let ratios: Vec<(f64, f64)> = probes
        .par_iter()
        .map(|f| Ok((gn_ratio_power(f, &power_constants, &engine)?, gn_ratio_hartree(f, &hartree_constants, &engine)?)))
        .collect::<hartree::Result<_>>()?;

    let mut rows = vec![
        vec!["power".into(), "extremizer".into(), num(r_ratio)],
        vec!["hartree".into(), "extremizer".into(), num(w_ratio)],
    ];
    for (i, (p, h)) in ratios.iter().enumerate() {
        rows.push(vec!["power".into(), i.to_string(), num(*p)]);
        rows.push(vec!["hartree".into(), i.to_string(), num(*h)]);
    }
    write_csv(&out.join("gn_ratios.csv"), &["kind", "probe_id", "ratio"], rows)?;
    let power: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let hartree: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    histogram(&out.join("gn_power_ratios.svg"), "power GN ratios of probes", "ratio", &power, 20, Some(1.0))?;
    histogram(&out.join("gn_hartree_ratios.svg"), "Hartree GN ratios of probes", "ratio", &hartree, 20, Some(1.0))?;

    let mut rep = Report::new("gn-verify", FailureKind::Concordance);
    rep.at_most("w_residual", w.residual, 1e-6, true);
    rep.at_most("r_residual", r.residual, 1e-6, true);
    rep.at_most("w_ratio_deviation", (w_ratio - 1.0).abs(), 1e-3, true);
    rep.at_most("r_ratio_deviation", (r_ratio - 1.0).abs(), 1e-3, true);
    rep.at_most("max_power_probe_ratio", power.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0 + 1e-6, true);
    rep.at_most("max_hartree_probe_ratio", hartree.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0 + 1e-6, true);
    rep.info("w_grad_norm_sq", w.functionals.kinetic);
    rep.info("r_mass", r.functionals.mass);
    Ok(rep)
}

pub fn run_compare_dnm(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let params = config.model()?;
    let engine = engine_for(config.grid()?);
    let ground = ground_state(config, &params, &engine)?;
    let n_samples: usize = config.get_or("n_samples", 50)?;
    let margin: f64 = config.get_or("margin", 1e-3)?;
    let estimates = sample_d_manifold(&params, &engine, &ground, n_samples, rng_seed(config)?)?;
    let d_n = estimates.d_n;
    write_csv(
        &out.join("dnm_samples.csv"),
        &["sample_id", "L", "d_N"],
        estimates.d_manifold_samples.iter().enumerate().map(|(i, &l)| vec![i.to_string(), num(l), num(d_n)]),
    )?;
    let count = estimates.d_manifold_samples.len() as f64;
    xy_plot(
        &out.join("dnm_samples.svg"),
        "L on {N < 0, V = 0}",
        "sample",
        "L",
        &[
            Series { label: "samples", points: estimates.d_manifold_samples.iter().enumerate().map(|(i, &l)| (i as f64, l)).collect() },
            Series { label: "d_N", points: vec![(0.0, d_n), (count, d_n)] },
        ],
        true,
    )?;
    let mut rep = Report::new("compare-dnm", FailureKind::Concordance);
    rep.info("d_N", d_n);
    rep.at_least("samples", count, n_samples as f64, true);
    rep.at_least("min_sample_L", estimates.d_manifold_min().unwrap_or(f64::NAN), d_n - margin, true);
    Ok(rep)
}

/// One initial datum of a dichotomy sweep.
#[derive(Debug, Clone)]
struct SeedDatum {
    kind: &'static str,
    scale: f64,
    width: f64,
    field: Field,
}

pub fn run_dichotomy(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let params = config.model()?;
    params.require_supercritical_band().map_err(|e| LabError::Config(e.to_string()))?;
    let engine = engine_for(config.grid()?);
    let cfg = evolve_config(config)?;
    let growth_bound: f64 = config.get_or("growth_bound", 2.0)?;
    let ground = ground_state(config, &params, &engine)?;
    let d_n = ground.functionals.lagrange;

    let mut seeds = Vec::new();
    for lambda in config.list_or("lambdas", &[0.5, 0.8, 0.9, 0.95, 1.02, 1.05, 1.1, 1.2])? {
        seeds.push(SeedDatum { kind: "scaled_ground_state", scale: lambda, width: f64::NAN, field: ground.field.scaled(lambda) });
    }
    let widths: Vec<f64> = config.list_or("gaussian_widths", &[1.0])?;
    for amplitude in config.list_or("gaussian_amplitudes", &[0.3, 0.6, 3.0, 4.0])? {
        for &width in &widths {
            seeds.push(SeedDatum { kind: "gaussian", scale: amplitude, width, field: make_gaussian(*engine.grid(), amplitude, width, [0.0; 3])? });
        }
    }

    let results: Vec<(Region, TrajectoryRecord)> = seeds
        .par_iter()
        .map(|s| {
            let region = classify(&report(&s.field, &params, &engine)?, d_n, DEFAULT_CLASSIFY_TOL);
            Ok((region, evolve(&s.field, &params, &cfg, &engine)?))
        })
        .collect::<hartree::Result<_>>()?;

    let mut rep = Report::new("dichotomy", FailureKind::Concordance);
    rep.info("d_N", d_n);
    let mut rows = Vec::new();
    let mut classified = 0usize;
    for (id, (seed, (region, record))) in seeds.iter().zip(&results).enumerate() {
        let initial = record.rows[0].report(&params);
        let constant = record.rows.iter().all(|r| classify(&r.report(&params), d_n, DEFAULT_CLASSIFY_TOL) == *region);
        let growth = record.max_gradient_growth().sqrt();
        if region.is_open() {
            classified += 1;
            let concordant = match region {
                Region::K => record.outcome.is_blowup(),
                _ => record.outcome == Outcome::GlobalUntilT && growth <= growth_bound,
            };
            if !concordant {
                rep.failures.push(format!("seed {id}: region {region} outcome {} growth {growth}", record.outcome));
            }
            if !constant {
                rep.failures.push(format!("seed {id}: region {region} not invariant along the trajectory"));
            }
        }
        rows.push(vec![
            id.to_string(),
            seed.kind.into(),
            num(seed.scale),
            num(seed.width),
            num(initial.lagrange),
            num(initial.nehari),
            num(initial.vfunc),
            region.label().into(),
            record.outcome.label().into(),
            num(record.outcome.t_star().unwrap_or(f64::NAN)),
            num(growth),
            constant.to_string(),
        ]);
    }
    rep.info("classified_seeds", classified as f64);
    rep.info("concordance_failures", rep.failures.len() as f64);
    write_csv(
        &out.join("dichotomy.csv"),
        &["seed_id", "kind", "scale", "width", "L", "N", "V", "region", "outcome", "t_star", "max_grad_growth", "region_constant"],
        rows,
    )?;
    let labelled: Vec<(String, &TrajectoryRecord)> =
        results.iter().enumerate().map(|(i, (region, rec))| (format!("{i} {region}"), rec)).collect();
    trajectory_plot(&out.join("dichotomy.svg"), "gradient growth per seed", &labelled)?;
    Ok(rep)
}

pub fn run_instability(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let params = config.model()?;
    params.require_supercritical_band().map_err(|e| LabError::Config(e.to_string()))?;
    let engine = engine_for(config.grid()?);
    let cfg = evolve_config(config)?;
    let u = ground_state(config, &params, &engine)?;
    let u_norm = h1_norm_sq(&u.field, &engine)?.sqrt();
    let mut lambdas: Vec<f64> = config.list_or("lambdas", &[1.2, 1.1, 1.05, 1.02])?;
    if lambdas.iter().any(|&l| !(l > 1.0)) {
        return Err(LabError::Config("instability lambdas must exceed 1".into()));
    }
    if config.get_or("control", false)? {
        lambdas.push(1.0);
    }
    let results: Vec<(f64, TrajectoryRecord)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let psi0 = u.field.scaled(lambda);
            Ok((h1_distance(&psi0, &u.field, &engine)?, evolve(&psi0, &params, &cfg, &engine)?))
        })
        .collect::<hartree::Result<_>>()?;

    let mut rep = Report::new("instability", FailureKind::Concordance);
    rep.info("u_h1_norm", u_norm);
    let mut rows = Vec::new();
    for (&lambda, (distance, record)) in lambdas.iter().zip(&results) {
        let expected = (lambda - 1.0) * u_norm;
        rows.push(vec![num(lambda), num(*distance), num(expected), record.outcome.label().into(), num(record.outcome.t_star().unwrap_or(f64::NAN))]);
        if lambda > 1.0 {
            rep.at_most(format!("distance_error_{lambda}"), (distance - expected).abs(), 1e-10 * u_norm, true);
            rep.flag(format!("blowup_{lambda}"), record.outcome.is_blowup(), true);
        } else {
            rep.flag("control_global", record.outcome == Outcome::GlobalUntilT, false);
        }
    }
    let mut ordered: Vec<(f64, f64)> = lambdas.iter().zip(&results).filter(|(l, _)| **l > 1.0).map(|(&l, (d, _))| (l, *d)).collect();
    ordered.sort_by(|a, b| b.0.total_cmp(&a.0));
    rep.flag("distances_decrease", ordered.windows(2).all(|w| w[1].1 < w[0].1), true);
    write_csv(&out.join("instability.csv"), &["lambda", "h1_distance", "expected_distance", "outcome", "t_star"], rows)?;
    let blowups: Vec<(f64, f64)> = lambdas.iter().zip(&results).filter_map(|(&l, (_, r))| r.outcome.t_star().map(|t| (l, t))).collect();
    xy_plot(&out.join("instability.svg"), "blow-up time of lambda u", "lambda", "t*", &[Series { label: "t*", points: blowups }], true)?;
    let labelled: Vec<(String, &TrajectoryRecord)> = lambdas.iter().zip(&results).map(|(l, (_, rec))| (format!("lambda {l}"), rec)).collect();
    trajectory_plot(&out.join("instability_growth.svg"), "gradient growth", &labelled)?;
    Ok(rep)
}

/// Minimizer at the configured mass together with the W bound used.
pub fn orbit_minimizer(config: &ExperimentConfig, engine: &SpectralEngine) -> LabResult<(GroundState, f64)> {
    let params = config.model()?;
    let options = solver_options(config)?;
    let w_grid = GridSpec::new(config.get_or("w_n", 64)?, config.get_or("w_L", 8.0)?).map_err(|e| LabError::Config(e.to_string()))?;
    let w_engine = engine_for(w_grid);
    let w_options = SolverOptions::new(config.get_or("w_tol", 1e-8)?, options.max_iter);
    let bound = solve_w(&w_engine, &default_seed(w_grid)?, &w_options)?.functionals.kinetic;
    let mass = if config.contains("mass") { config.get("mass")? } else { config.get_or("mass_fraction", 0.5)? * bound };
    let grid = *engine.grid();
    let seed = make_gaussian(grid, 0.01, grid.half_length() / 8.0, [0.0; 3])?;
    Ok((solve_mass_constrained(mass, bound, &params, engine, &seed, &options)?, bound))
}

pub fn run_orbit_stability(config: &ExperimentConfig, out: &Path) -> LabResult<Report> {
    let params = config.model()?;
    params.require_subcritical_band().map_err(|e| LabError::Config(e.to_string()))?;
    let mut engine = engine_for(config.grid()?);
    if config.contains("tail_tolerance") {
        engine = engine.with_tail_tolerance(config.get("tail_tolerance")?);
    }
    let cfg = EvolveConfig {
        dt: config.get("dt")?,
        t_end: config.get("t_end")?,
        sample_every: config.get_or("sample_every", 10)?,
        hartree_mode: config.hartree_mode()?,
        ..EvolveConfig::default()
    };
    cfg.validate().map_err(|e| LabError::Config(e.to_string()))?;
    let deltas: Vec<f64> = config.list_or("deltas", &[1e-2, 3e-2])?;
    let epsilon_factor: f64 = config.get_or("epsilon_factor", 10.0)?;
    let control_tol: f64 = config.get_or("control_tol", 1e-6)?;

    let (u, bound) = orbit_minimizer(config, &engine)?;
    let mass = u.functionals.mass;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed(config)?);
    let g = localized_perturbation(&engine, &mut rng)?;

    let runs: Vec<Vec<(f64, crate::orbit::OrbitDistanceResult)>> = deltas
        .par_iter()
        .map(|&delta| {
            let raw = u.field.add_scaled(&g, delta)?;
            let psi0 = raw.scaled((mass / raw.mass()).sqrt());
            let mut samples = Vec::new();
            evolve_observed(&psi0, &params, &cfg, &engine, |t, state| {
                samples.push((t, orbit_distance(state, &u.field, &engine)?));
                Ok(())
            })?;
            Ok(samples)
        })
        .collect::<hartree::Result<_>>()?;

    let mut rep = Report::new("orbit-stability", FailureKind::Stability);
    rep.info("w_grad_norm_sq", bound);
    rep.info("mass", mass);
    rep.info("frequency", standing_wave_frequency(&u));
    rep.info("minimizer_residual", u.residual);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (&delta, samples) in deltas.iter().zip(&runs) {
        let sup = samples.iter().map(|s| s.1.distance_h1).fold(0.0, f64::max);
        let epsilon = if delta > 0.0 { epsilon_factor * delta } else { control_tol };
        rep.at_most(format!("sup_distance_delta_{delta}"), sup, epsilon, true);
        for (t, d) in samples {
            rows.push(vec![
                num(delta),
                num(*t),
                num(d.distance_h1),
                d.best_shift[0].to_string(),
                d.best_shift[1].to_string(),
                d.best_shift[2].to_string(),
                num(d.best_phase),
            ]);
        }
        series.push((format!("delta {delta}"), samples.iter().map(|(t, d)| (*t, d.distance_h1)).collect::<Vec<_>>()));
    }
    write_csv(&out.join("orbit_distance.csv"), &["delta", "t", "distance_h1", "shift_x", "shift_y", "shift_z", "phase"], rows)?;
    let plotted: Vec<Series> = series.iter().map(|(label, points)| Series { label, points: points.clone() }).collect();
    xy_plot(&out.join("orbit_distance.svg"), "H1 distance to the minimizer orbit", "t", "distance", &plotted, false)?;
    Ok(rep)
}
