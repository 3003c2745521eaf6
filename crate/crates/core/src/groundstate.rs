//! Ground states and Gagliardo-Nirenberg extremizers by Nehari-projected,
//! preconditioned gradient flow, plus the mass-constrained minimizer.
//!
//! Each elliptic problem has the shape `-a Lap u + b u = NL(u)` with a
//! homogeneous nonlinearity. A step moves along `-(b - a Lap)^{-1} res` and the
//! result is rescaled onto the problem's Nehari manifold in closed form (or by a
//! scalar root for two nonlinearities). Steps that raise the projected
//! objective are halved.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functionals::{self, FunctionalReport, Parts, ScalingKind};
use crate::model::{make_gaussian, Field, GridSpec, ModelParams, GRID_DIM};
use crate::spectral::{HartreeMode, SpectralEngine};

/// Which elliptic problem a [`GroundState`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationTag {
    /// `-omega u + Lap u + V_H u + |u|^{p-1} u = 0`
    StandingWave,
    /// `(qD/2) Lap R - (1 + q(2-D)/2) R + R^{2q+1} = 0`
    PowerExtremizer,
    /// `-Lap W + W - V_H W = 0`
    HartreeExtremizer,
    /// Minimizer of the energy at fixed mass.
    MassConstrained,
}

impl EquationTag {
    pub fn label(&self) -> &'static str {
        match self {
            EquationTag::StandingWave => "standing_wave",
            EquationTag::PowerExtremizer => "gn_power",
            EquationTag::HartreeExtremizer => "gn_hartree",
            EquationTag::MassConstrained => "mass_constrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target relative L2 residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial preconditioned step.
    pub step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 2000, step: 0.5 }
    }
}

impl SolverOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub field: Field,
    pub residual: f64,
    /// Functionals under the parameters the state was solved for; see
    /// [`GroundState::params`].
    pub functionals: FunctionalReport,
    pub params: ModelParams,
    pub iterations: usize,
    pub equation: EquationTag,
    /// Projected objective after every accepted step.
    pub objective_history: Vec<f64>,
}

impl GroundState {
    /// Header of [`GroundState::csv_row`].
    pub const CSV_HEADER: &'static str = "equation_tag,residual,mass,kinetic,lp,hartree,L,N,V,iterations";

    pub fn csv_row(&self) -> String {
        let f = &self.functionals;
        format!(
            "{},{:.6e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{:.6e},{}",
            self.equation.label(),
            self.residual,
            f.mass,
            f.kinetic,
            f.lp,
            f.hartree,
            f.lagrange,
            f.nehari,
            f.vfunc,
            self.iterations
        )
    }
}

/// Estimates of the three variational levels.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalEstimates {
    pub d_n: f64,
    /// `L` of every accepted sample on `{N < 0, V = 0}`.
    pub d_manifold_samples: Vec<f64>,
    pub d_m: Option<f64>,
}

impl VariationalEstimates {
    pub fn d_manifold_min(&self) -> Option<f64> {
        self.d_manifold_samples.iter().copied().reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy)]
enum Problem {
    Standing { p: f64, omega: f64 },
    Power { q: f64 },
    Hartree,
}

impl Problem {
    /// `(a, b)` of the linear part `-a Lap + b`.
    fn linear(&self) -> (f64, f64) {
        let d = GRID_DIM as f64;
        match *self {
            Problem::Standing { omega, .. } => (1.0, omega),
            Problem::Power { q } => (q * d / 2.0, 1.0 + q * (2.0 - d) / 2.0),
            Problem::Hartree => (1.0, 1.0),
        }
    }

    /// Exponent `r` of the power term `int |u|^r / r`, if any.
    fn power(&self) -> Option<f64> {
        match *self {
            Problem::Standing { p, .. } => Some(p + 1.0),
            Problem::Power { q } => Some(2.0 * q + 2.0),
            Problem::Hartree => None,
        }
    }

    fn has_hartree(&self) -> bool {
        !matches!(self, Problem::Power { .. })
    }
}

/// A real iterate with its integrals and Hartree potential.
struct Iterate {
    values: Vec<f64>,
    spectrum: Vec<Complex64>,
    kinetic: f64,
    mass: f64,
    power: f64,
    hartree: f64,
    potential: Vec<f64>,
}

impl Iterate {
    fn scale(&mut self, lambda: f64, r: Option<f64>) {
        let l2 = lambda * lambda;
        self.values.iter_mut().for_each(|v| *v *= lambda);
        self.spectrum.iter_mut().for_each(|z| *z *= lambda);
        self.kinetic *= l2;
        self.mass *= l2;
        if let Some(r) = r {
            self.power *= lambda.powf(r);
        }
        self.hartree *= l2 * l2;
        self.potential.iter_mut().for_each(|v| *v *= l2);
    }
}

struct Flow<'a> {
    engine: &'a SpectralEngine,
    problem: Problem,
}

impl<'a> Flow<'a> {
    fn evaluate(&self, values: Vec<f64>) -> Iterate {
        let engine = self.engine;
        let h3 = engine.grid().cell_volume();
        let complex: Vec<Complex64> = values.iter().map(|&v| v.into()).collect();
        let spectrum = engine.dft(&complex);
        let kinetic = engine.kinetic_from_dft(&spectrum);
        let mass = values.iter().map(|v| v * v).sum::<f64>() * h3;
        let power = self.problem.power().map_or(0.0, |r| values.iter().map(|v| v.abs().powf(r)).sum::<f64>() * h3);
        let (hartree, potential) = if self.problem.has_hartree() {
            let density: Vec<f64> = values.iter().map(|v| v * v).collect();
            let potential = engine.hartree_of_density(&density, HartreeMode::Truncated);
            let hartree = potential.iter().zip(&density).map(|(a, b)| a * b).sum::<f64>() * h3;
            (hartree, potential)
        } else {
            (0.0, Vec::new())
        };
        Iterate { values, spectrum, kinetic, mass, power, hartree, potential }
    }

    /// Rescales onto the Nehari manifold of the problem.
    fn project(&self, it: &mut Iterate) -> Result<()> {
        let (a, b) = self.problem.linear();
        let quad = a * it.kinetic + b * it.mass;
        let lambda = match self.problem {
            Problem::Hartree => {
                if !(it.hartree > 0.0) {
                    return Err(Error::Collapse("Hartree term vanished during rescaling".into()));
                }
                (quad / it.hartree).sqrt()
            }
            Problem::Power { q } => {
                if !(it.power > 0.0) {
                    return Err(Error::Collapse("power term vanished during rescaling".into()));
                }
                (quad / it.power).powf(1.0 / (2.0 * q))
            }
            Problem::Standing { p, omega } => {
                let params = ModelParams { dim: GRID_DIM, p, omega };
                let parts = Parts { kinetic: it.kinetic, mass: it.mass, lp: it.power, hartree: it.hartree };
                functionals::nehari_lambda_from_parts(&parts, &params)
                    .map_err(|e| Error::Collapse(format!("Nehari projection failed: {e}")))?
            }
        };
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::Collapse(format!("rescaling factor {lambda}")));
        }
        it.scale(lambda, self.problem.power());
        if it.mass < 1e-300 {
            return Err(Error::Collapse("field norm underflow".into()));
        }
        Ok(())
    }

    fn objective(&self, it: &Iterate) -> f64 {
        let (a, b) = self.problem.linear();
        let power_term = self.problem.power().map_or(0.0, |r| it.power / r);
        0.5 * (a * it.kinetic + b * it.mass) - power_term - 0.25 * it.hartree
    }

    /// Residual spectrum of `-a Lap u + b u - NL(u)` and its relative L2 size.
    fn residual(&self, it: &Iterate) -> (Vec<Complex64>, f64) {
        let (a, b) = self.problem.linear();
        let nonlinear: Vec<Complex64> = (0..it.values.len())
            .map(|i| {
                let u = it.values[i];
                let mut nl = 0.0;
                if let Some(r) = self.problem.power() {
                    nl += u.abs().powf(r - 2.0) * u;
                }
                if self.problem.has_hartree() {
                    nl += it.potential[i] * u;
                }
                nl.into()
            })
            .collect();
        let nl_hat = self.engine.dft(&nonlinear);
        let symbol = self.engine.laplacian_symbol();
        let mut res_norm = 0.0;
        let mut lin_norm = 0.0;
        let res: Vec<Complex64> = it
            .spectrum
            .iter()
            .zip(&nl_hat)
            .zip(symbol)
            .map(|((u, nl), s)| {
                let lin = u * (b - a * s);
                let r = lin - nl;
                res_norm += r.norm_sqr();
                lin_norm += lin.norm_sqr();
                r
            })
            .collect();
        (res, (res_norm / lin_norm).sqrt())
    }

    fn solve(&self, seed: &Field, options: &SolverOptions) -> Result<(Vec<f64>, f64, usize, Vec<f64>)> {
        self.engine.grid().ensure_same(seed.grid())?;
        let (a, b) = self.problem.linear();
        let symbol = self.engine.laplacian_symbol();
        let mut it = self.evaluate(seed.values().iter().map(|z| z.re).collect());
        self.project(&mut it)?;
        let mut objective = self.objective(&it);
        let mut history = vec![objective];
        let mut step = options.step;
        for iteration in 0..options.max_iter {
            let (res, rel) = self.residual(&it);
            if !rel.is_finite() {
                return Err(Error::Collapse("non-finite residual".into()));
            }
            if rel <= options.tol {
                return Ok((it.values, rel, iteration, history));
            }
            let direction: Vec<Complex64> = res.iter().zip(symbol).map(|(r, s)| r / (b - a * s)).collect();
            let direction = self.engine.idft(direction);
            loop {
                let trial_values: Vec<f64> = it.values.iter().zip(&direction).map(|(u, d)| u - step * d.re).collect();
                let mut trial = self.evaluate(trial_values);
                self.project(&mut trial)?;
                let trial_objective = self.objective(&trial);
                if trial_objective <= objective + 1e-12 * objective.abs() {
                    it = trial;
                    objective = trial_objective;
                    history.push(objective);
                    step = (step * 1.25).min(options.step);
                    break;
                }
                step *= 0.5;
                if step < 1e-8 {
                    return Err(Error::NoConvergence { iterations: iteration, residual: rel });
                }
            }
        }
        let (_, rel) = self.residual(&it);
        if rel <= options.tol {
            return Ok((it.values, rel, options.max_iter, history));
        }
        Err(Error::NoConvergence { iterations: options.max_iter, residual: rel })
    }
}

fn real_field(grid: GridSpec, values: &[f64]) -> Result<Field> {
    Field::new(grid, values.iter().map(|&v| v.into()).collect())
}

fn finish(
    flow: &Flow<'_>,
    equation: EquationTag,
    params: ModelParams,
    seed: &Field,
    options: &SolverOptions,
) -> Result<GroundState> {
    let grid = *seed.grid();
    let (values, residual, iterations, history) = flow.solve(seed, options)?;
    let field = real_field(grid, &values)?;
    let functionals = functionals::report(&field, &params, flow.engine)?;
    Ok(GroundState { field, residual, functionals, params, iterations, equation, objective_history: history })
}

/// Default seed: unit Gaussian of width 1 centred in the box.
pub fn default_seed(grid: GridSpec) -> Result<Field> {
    make_gaussian(grid, 1.0, 1.0, [0.0; 3])
}

/// Extremizer `W` of the Hartree Gagliardo-Nirenberg inequality. Its report is
/// taken at the mass-critical exponent with `omega = 1`.
pub fn solve_w(engine: &SpectralEngine, seed: &Field, options: &SolverOptions) -> Result<GroundState> {
    let params = ModelParams { dim: GRID_DIM, p: 1.0 + 4.0 / GRID_DIM as f64, omega: 1.0 };
    finish(&Flow { engine, problem: Problem::Hartree }, EquationTag::HartreeExtremizer, params, seed, options)
}

/// Extremizer `R` of the power Gagliardo-Nirenberg inequality with exponent
/// `2q + 2`. Its report uses `p = 2q + 1` and `omega = 1 + q(2 - D)/2`, so
/// `lp` is `||R||_{2q+2}^{2q+2}`; the Hartree entry is the periodic one.
pub fn solve_r(engine: &SpectralEngine, q: f64, seed: &Field, options: &SolverOptions) -> Result<GroundState> {
    let d = GRID_DIM as f64;
    let hi = 2.0 / (d - 2.0);
    if !(q > 0.0 && q < hi) {
        return Err(Error::QOutOfRange { q, hi });
    }
    let params = ModelParams { dim: GRID_DIM, p: 2.0 * q + 1.0, omega: 1.0 + q * (2.0 - d) / 2.0 };
    let flow = Flow { engine, problem: Problem::Power { q } };
    let (values, residual, iterations, history) = flow.solve(seed, options)?;
    let field = real_field(*engine.grid(), &values)?;
    // R never sees the Hartree term and is wider than the free-space margin
    let functionals = functionals::report_with(&field, &params, engine, HartreeMode::Periodic)?;
    Ok(GroundState {
        field,
        residual,
        functionals,
        params,
        iterations,
        equation: EquationTag::PowerExtremizer,
        objective_history: history,
    })
}

/// Ground state of the standing-wave equation; `functionals.lagrange` is the
/// resulting estimate of `d_N`.
pub fn solve_ground_state(
    params: &ModelParams,
    engine: &SpectralEngine,
    seed: &Field,
    options: &SolverOptions,
) -> Result<GroundState> {
    params.require_supercritical_band()?;
    if !(params.omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega = {} must be positive", params.omega)));
    }
    let flow = Flow { engine, problem: Problem::Standing { p: params.p, omega: params.omega } };
    finish(&flow, EquationTag::StandingWave, *params, seed, options)
}

/// Gaussian seed used by [`estimate_d_n`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSeed {
    pub amplitude: f64,
    pub width: f64,
}

/// Minimum of the converged `L` over ground-state runs from several seeds,
/// together with the best state.
pub fn estimate_d_n(
    params: &ModelParams,
    engine: &SpectralEngine,
    seeds: &[GaussianSeed],
    options: &SolverOptions,
) -> Result<(f64, GroundState)> {
    let mut best: Option<GroundState> = None;
    for seed in seeds {
        let Ok(field) = make_gaussian(*engine.grid(), seed.amplitude, seed.width, [0.0; 3]) else {
            continue;
        };
        let Ok(state) = solve_ground_state(params, engine, &field, options) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| state.functionals.lagrange < b.functionals.lagrange) {
            best = Some(state);
        }
    }
    let best = best.ok_or(Error::AllSeedsFailed(seeds.len()))?;
    Ok((best.functionals.lagrange, best))
}

/// Band-limited real random field: Fourier coefficients drawn uniformly on
/// `|k| <= k_max`, real part taken (which symmetrizes the spectrum), unit L2
/// norm.
pub fn band_limited_field(engine: &SpectralEngine, k_max: f64, rng: &mut impl Rng) -> Result<Field> {
    let grid = *engine.grid();
    let coeffs = (0..grid.len())
        .map(|idx| {
            let k = engine.wavevector(idx);
            if (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt() <= k_max {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::default()
            }
        })
        .collect();
    let values = engine.idft(coeffs);
    let field = Field::new(grid, values.iter().map(|z| z.re.into()).collect())?;
    let norm = field.mass().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(field.scaled(1.0 / norm))
}

/// Smooth localized perturbation: a band-limited random field with
/// `k_max = n pi / (4L)` under a Gaussian envelope of width `L/6`, unit L2 norm.
pub fn localized_perturbation(engine: &SpectralEngine, rng: &mut impl Rng) -> Result<Field> {
    let grid = *engine.grid();
    let k_max = grid.n() as f64 * std::f64::consts::PI / (4.0 * grid.half_length());
    let raw = band_limited_field(engine, k_max, rng)?;
    let envelope = make_gaussian(grid, 1.0, grid.half_length() / 6.0, [0.0; 3])?;
    let values = raw.values().iter().zip(envelope.values()).map(|(a, b)| a * b.re).collect();
    let field = Field::new(grid, values)?;
    let norm = field.mass().sqrt();
    Ok(field.scaled(1.0 / norm))
}

/// Samples `L` on `{N < 0, V = 0}` from perturbed, amplitude-scaled copies of
/// the ground state, each moved onto `V = 0`.
///
/// Above the mass-critical exponent the move is the mass dilation with factor
/// from [`functionals::v_zero_lambda_from_parts`]; at the critical exponent it
/// is the amplitude scaling that zeroes `V`. The scaled functionals follow from
/// the exact lambda laws, so the dilated field never has to be resampled.
pub fn sample_d_manifold(
    params: &ModelParams,
    engine: &SpectralEngine,
    ground: &GroundState,
    n_samples: usize,
    rng_seed: u64,
) -> Result<VariationalEstimates> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let base_norm = ground.field.mass().sqrt();
    let critical = (params.p - params.mass_critical_p()).abs() <= 1e-12 * params.p;
    let mut samples = Vec::with_capacity(n_samples);
    let mut attempts = 0usize;
    while samples.len() < n_samples && attempts < 20 * n_samples.max(1) {
        attempts += 1;
        let size = rng.gen_range(0.0..0.3);
        let amplitude = rng.gen_range(1.01..2.0);
        let g = localized_perturbation(engine, &mut rng)?;
        let candidate = ground.field.add_scaled(&g, size * base_norm)?.scaled(amplitude);
        let parts = functionals::parts(&candidate, params, engine)?;
        let Some(on_manifold) = move_to_v_zero(&parts, params, critical) else {
            continue;
        };
        let nehari = on_manifold.nehari(params);
        let v = on_manifold.vfunc(params);
        if nehari < 0.0 && v.abs() <= 1e-6 * on_manifold.big_k(params) {
            samples.push(on_manifold.lagrange(params));
        }
    }
    if samples.is_empty() {
        return Err(Error::NoValidSamples(attempts));
    }
    Ok(VariationalEstimates { d_n: ground.functionals.lagrange, d_manifold_samples: samples, d_m: None })
}

fn move_to_v_zero(parts: &Parts, params: &ModelParams, critical: bool) -> Option<Parts> {
    if !critical {
        let lambda = functionals::v_zero_lambda_from_parts(parts, params, 0.0).ok()??;
        return Some(functionals::scaled_parts(parts, ScalingKind::MassDilation, lambda, params));
    }
    // V[lambda v] / lambda^2 = kinetic - c lambda^{p-1} lp - lambda^2 hartree / 2 decreases in lambda
    if parts.vfunc(params) <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    let v_at = |lam: f64| parts.amplitude_scaled(lam, params.p).vfunc(params);
    while v_at(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(parts.amplitude_scaled(0.5 * (lo + hi), params.p))
}

/// Minimizer of the energy at mass `m` by normalized preconditioned gradient
/// flow. Requires `1 < p < 1 + 4/D` and `0 < m < mass_bound`, where the bound
/// is `||grad W||_2^2`.
pub fn solve_mass_constrained(
    m: f64,
    mass_bound: f64,
    params: &ModelParams,
    engine: &SpectralEngine,
    seed: &Field,
    options: &SolverOptions,
) -> Result<GroundState> {
    params.require_subcritical_band()?;
    if !(m > 0.0 && m < mass_bound) {
        return Err(Error::MassOutOfRange { m, hi: mass_bound });
    }
    engine.grid().ensure_same(seed.grid())?;
    let grid = *engine.grid();
    let h3 = grid.cell_volume();
    let p = params.p;
    let symbol = engine.laplacian_symbol();

    let normalize = |values: &mut Vec<f64>| -> Result<()> {
        let mass = values.iter().map(|v| v * v).sum::<f64>() * h3;
        if !(mass > 1e-300) {
            return Err(Error::Collapse("field norm underflow".into()));
        }
        let s = (m / mass).sqrt();
        values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    };
    let flow = Flow { engine, problem: Problem::Standing { p, omega: 0.0 } };
    let energy = |it: &Iterate| 0.5 * it.kinetic - 0.25 * it.hartree - it.power / (p + 1.0);

    let mut values: Vec<f64> = seed.values().iter().map(|z| z.re).collect();
    normalize(&mut values)?;
    let mut it = flow.evaluate(values);
    let mut current = energy(&it);
    let mut history = vec![current];
    let mut step = options.step;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < options.max_iter {
        // multiplier mu from <u, -Lap u - NL(u) + mu u> = 0
        let mu = (it.hartree + it.power - it.kinetic) / it.mass;
        let shift = if mu > 1e-3 { mu } else { 1.0 };
        let (res, rel) = {
            let flow_mu = Flow { engine, problem: Problem::Standing { p, omega: mu } };
            flow_mu.residual(&it)
        };
        residual = rel;
        if !rel.is_finite() {
            return Err(Error::Collapse("non-finite residual".into()));
        }
        if rel <= options.tol {
            break;
        }
        let direction = engine.idft(res.iter().zip(symbol).map(|(r, s)| r / (shift - s)).collect());
        loop {
            let mut trial_values: Vec<f64> = it.values.iter().zip(&direction).map(|(u, d)| u - step * d.re).collect();
            normalize(&mut trial_values)?;
            let trial = flow.evaluate(trial_values);
            let e = energy(&trial);
            if e <= current + 1e-12 * current.abs() {
                it = trial;
                current = e;
                history.push(e);
                step = (step * 1.25).min(options.step);
                break;
            }
            step *= 0.5;
            if step < 1e-8 {
                return Err(Error::NoConvergence { iterations, residual });
            }
        }
        iterations += 1;
    }
    if residual > options.tol {
        return Err(Error::NoConvergence { iterations, residual });
    }
    let field = real_field(grid, &it.values)?;
    let functionals = functionals::report(&field, params, engine)?;
    Ok(GroundState {
        field,
        residual,
        functionals,
        params: *params,
        iterations,
        equation: EquationTag::MassConstrained,
        objective_history: history,
    })
}

/// Frequency `mu` of the standing wave `u e^{i mu t}` through a
/// mass-constrained minimizer: `mu = (hartree + lp - kinetic) / mass`.
pub fn standing_wave_frequency(state: &GroundState) -> f64 {
    let f = &state.functionals;
    (f.hartree + f.lp - f.kinetic) / f.mass
}
