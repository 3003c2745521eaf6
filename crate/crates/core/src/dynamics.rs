//! Strang split-step time integration with virial monitors and a blow-up
//! detector.
//!
//! The linear substep `psi^ <- psi^ exp(-i |k|^2 dt / 2)` and the nonlinear
//! substep `psi <- psi exp(i dt (V_H + |psi|^{p-1}))` are both exact; the
//! nonlinear one leaves `|psi|` untouched, so freezing `V_H` is exact too.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{lebesgue_integral, FunctionalReport, Parts};
use crate::model::{Field, ModelParams};
use crate::spectral::{HartreeMode, SpectralEngine};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between monitor rows.
    pub sample_every: usize,
    /// Gradient growth factor `F` of the blow-up test.
    pub blowup_factor: f64,
    pub dt_min: f64,
    pub hartree_mode: HartreeMode,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 5.0, sample_every: 10, blowup_factor: 10.0, dt_min: 1e-8, hartree_mode: HartreeMode::Truncated }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt > self.dt_min) {
            return Err(Error::InvalidArgument(format!("need dt > dt_min > 0, got dt = {}, dt_min = {}", self.dt, self.dt_min)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidArgument(format!("t_end = {} must be positive", self.t_end)));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::InvalidArgument(format!("blow-up factor {} must exceed 1", self.blowup_factor)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    GlobalUntilT,
    /// Detector fired at `t_star`; `nonfinite` marks a NaN/Inf state, in which
    /// case `t_star` is the last finite sample.
    Blowup { t_star: f64, nonfinite: bool },
    Inconclusive,
}

impl Outcome {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Outcome::Blowup { .. })
    }

    pub fn t_star(&self) -> Option<f64> {
        match self {
            Outcome::Blowup { t_star, .. } => Some(*t_star),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::GlobalUntilT => "GLOBAL_UNTIL_T",
            Outcome::Blowup { .. } => "BLOWUP",
            Outcome::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Blowup { t_star, nonfinite: true } => write!(f, "BLOWUP({t_star}, nonfinite)"),
            Outcome::Blowup { t_star, .. } => write!(f, "BLOWUP({t_star})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_norm_sq: f64,
    pub g: f64,
    pub g_prime: f64,
    pub eight_v: f64,
    pub lp: f64,
    pub hartree: f64,
    pub dt: f64,
}

impl TrajectoryRow {
    pub fn parts(&self) -> Parts {
        Parts { kinetic: self.grad_norm_sq, mass: self.mass, lp: self.lp, hartree: self.hartree }
    }

    pub fn report(&self, params: &ModelParams) -> FunctionalReport {
        FunctionalReport::from_parts(&self.parts(), params)
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
    pub outcome: Outcome,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub final_state: Field,
}

impl TrajectoryRecord {
    pub const CSV_HEADER: &'static str = "t,mass,energy,grad_norm_sq,G,G_prime,eightV";

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.6},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                r.t, r.mass, r.energy, r.grad_norm_sq, r.g, r.g_prime, r.eight_v
            )?;
        }
        writeln!(out, "# outcome={}", self.outcome)
    }

    /// Largest `||grad psi(t)||^2 / ||grad psi(0)||^2` over the samples.
    pub fn max_gradient_growth(&self) -> f64 {
        let g0 = self.rows[0].grad_norm_sq;
        self.rows.iter().map(|r| r.grad_norm_sq / g0).fold(0.0, f64::max)
    }
}

/// Applies the split-step propagator for one parameter set and Hartree mode.
pub struct Stepper<'a> {
    engine: &'a SpectralEngine,
    params: ModelParams,
    mode: HartreeMode,
    nonlinear: bool,
    dt: f64,
    half_phase: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(engine: &'a SpectralEngine, params: &ModelParams, mode: HartreeMode, dt: f64) -> Self {
        let mut s = Self { engine, params: *params, mode, nonlinear: true, dt: f64::NAN, half_phase: Vec::new() };
        s.set_dt(dt);
        s
    }

    /// Drops both nonlinear terms, leaving the free Schrodinger flow.
    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn set_dt(&mut self, dt: f64) {
        if dt == self.dt {
            return;
        }
        self.dt = dt;
        self.half_phase =
            self.engine.laplacian_symbol().iter().map(|&s| Complex64::from_polar(1.0, s * dt / 2.0)).collect();
    }

    fn linear_half(&self, values: &mut Vec<Complex64>) {
        let mut spec = self.engine.dft(values);
        spec.iter_mut().zip(&self.half_phase).for_each(|(z, ph)| *z *= ph);
        *values = self.engine.idft(spec);
    }

    fn nonlinear_full(&self, values: &mut [Complex64]) {
        if !self.nonlinear {
            return;
        }
        let density: Vec<f64> = values.iter().map(|z| z.norm_sqr()).collect();
        let potential = self.engine.hartree_of_density(&density, self.mode);
        let e = (self.params.p - 1.0) / 2.0;
        for ((z, v), rho) in values.iter_mut().zip(&potential).zip(&density) {
            *z *= Complex64::from_polar(1.0, self.dt * (v + rho.powf(e)));
        }
    }

    /// One Strang step in place.
    pub fn step(&self, values: &mut Vec<Complex64>) {
        self.linear_half(values);
        self.nonlinear_full(values);
        self.linear_half(values);
    }
}

/// One Strang step of size `dt` (negative `dt` runs backwards).
pub fn step_strang(field: &Field, dt: f64, params: &ModelParams, engine: &SpectralEngine) -> Result<Field> {
    step_strang_with(field, dt, params, engine, HartreeMode::Truncated, true)
}

pub fn step_strang_with(
    field: &Field,
    dt: f64,
    params: &ModelParams,
    engine: &SpectralEngine,
    mode: HartreeMode,
    nonlinear: bool,
) -> Result<Field> {
    engine.grid().ensure_same(field.grid())?;
    let mut stepper = Stepper::new(engine, params, mode, dt);
    if !nonlinear {
        stepper = stepper.linear_only();
    }
    let mut values = field.values().to_vec();
    stepper.step(&mut values);
    let out = Field::new(*field.grid(), values)?;
    if !out.is_finite() {
        return Err(Error::NonfiniteState(dt));
    }
    Ok(out)
}

/// `G = int |x|^2 |psi|^2` and `G' = 4 Im int x . conj(psi) grad psi`.
///
/// With `psi = a + ib`, `Im(conj(psi) grad psi) = a grad b - b grad a`; the two
/// real gradients are taken separately so a real field gives `G' = 0` exactly.
fn moments(field: &Field, engine: &SpectralEngine) -> Result<(f64, f64)> {
    let grid = *field.grid();
    let h3 = grid.cell_volume();
    let re = Field::new(grid, field.values().iter().map(|z| z.re.into()).collect())?;
    let im = Field::new(grid, field.values().iter().map(|z| z.im.into()).collect())?;
    let grad_re = engine.gradient(&re)?;
    let grad_im = engine.gradient(&im)?;
    let mut g = 0.0;
    let mut g_prime = 0.0;
    for (idx, z) in field.values().iter().enumerate() {
        let x = grid.position(idx);
        g += (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * z.norm_sqr();
        for axis in 0..3 {
            g_prime += x[axis] * (z.re * grad_im[axis].values()[idx].re - z.im * grad_re[axis].values()[idx].re);
        }
    }
    Ok((g * h3, 4.0 * g_prime * h3))
}

/// `(G, G', 8 V)`; requires the free-space support margin.
pub fn virial_monitors(field: &Field, params: &ModelParams, engine: &SpectralEngine) -> Result<(f64, f64, f64)> {
    engine.check_support(field)?;
    let (g, g_prime) = moments(field, engine)?;
    let parts = Parts {
        kinetic: engine.kinetic(field)?,
        mass: field.mass(),
        lp: lebesgue_integral(field, params.p + 1.0),
        hartree: engine.hartree_energy(field, HartreeMode::Truncated)?,
    };
    Ok((g, g_prime, 8.0 * parts.vfunc(params)))
}

fn sample(field: &Field, t: f64, dt: f64, params: &ModelParams, engine: &SpectralEngine, mode: HartreeMode) -> Result<TrajectoryRow> {
    let (g, g_prime) = moments(field, engine)?;
    let density = field.density();
    let potential = engine.hartree_of_density(&density, mode);
    let hartree = potential.iter().zip(&density).map(|(a, b)| a * b).sum::<f64>() * field.grid().cell_volume();
    let parts = Parts {
        kinetic: engine.kinetic(field)?,
        mass: field.mass(),
        lp: lebesgue_integral(field, params.p + 1.0),
        hartree,
    };
    Ok(TrajectoryRow {
        t,
        mass: parts.mass,
        energy: parts.energy(params),
        grad_norm_sq: parts.kinetic,
        g,
        g_prime,
        eight_v: 8.0 * parts.vfunc(params),
        lp: parts.lp,
        hartree,
        dt,
    })
}

pub fn evolve(initial: &Field, params: &ModelParams, config: &EvolveConfig, engine: &SpectralEngine) -> Result<TrajectoryRecord> {
    evolve_observed(initial, params, config, engine, |_, _| Ok(()))
}

/// [`evolve`] calling `observer(t, state)` at every sample.
///
/// The step is halved whenever `||grad psi||^2` grows by more than 20% between
/// samples and doubled back (never above the base step) once growth drops
/// below 5%. The run is inconclusive when it reaches `t_end` on a reduced step.
pub fn evolve_observed(
    initial: &Field,
    params: &ModelParams,
    config: &EvolveConfig,
    engine: &SpectralEngine,
    mut observer: impl FnMut(f64, &Field) -> Result<()>,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    engine.grid().ensure_same(initial.grid())?;
    if !initial.is_finite() {
        return Err(Error::NonfiniteState(0.0));
    }
    if config.hartree_mode == HartreeMode::Truncated {
        engine.check_support(initial)?;
    }
    let grid = *initial.grid();
    let mode = config.hartree_mode;
    let mut stepper = Stepper::new(engine, params, mode, config.dt);
    let mut values = initial.values().to_vec();
    let mut t = 0.0;
    let mut rows = vec![sample(initial, t, config.dt, params, engine, mode)?];
    observer(t, initial)?;
    let grad0 = rows[0].grad_norm_sq;
    let mut last_finite = initial.clone();
    let outcome = 'run: loop {
        let remaining = config.t_end - t;
        if remaining <= 1e-12 * config.t_end {
            break if stepper.dt() < config.dt { Outcome::Inconclusive } else { Outcome::GlobalUntilT };
        }
        let base = stepper.dt();
        for _ in 0..config.sample_every {
            let left = config.t_end - t;
            if left <= 1e-12 * config.t_end {
                break;
            }
            if left < stepper.dt() {
                stepper.set_dt(left);
            }
            stepper.step(&mut values);
            t += stepper.dt();
        }
        stepper.set_dt(base);
        let state = Field::new(grid, values.clone())?;
        if !state.is_finite() {
            break 'run Outcome::Blowup { t_star: rows.last().map_or(0.0, |r| r.t), nonfinite: true };
        }
        let row = sample(&state, t, stepper.dt(), params, engine, mode)?;
        observer(t, &state)?;
        let prev = rows.last().map_or(row.grad_norm_sq, |r| r.grad_norm_sq);
        rows.push(row);
        last_finite = state;

        let n = rows.len();
        let concave = n >= 3 && rows[n - 3..].iter().all(|r| r.eight_v < 0.0);
        if row.grad_norm_sq.sqrt() >= config.blowup_factor * grad0.sqrt() && concave {
            break Outcome::Blowup { t_star: t, nonfinite: false };
        }
        let growth = row.grad_norm_sq / prev;
        if growth > 1.2 {
            let halved = stepper.dt() / 2.0;
            if halved < config.dt_min {
                break Outcome::Blowup { t_star: t, nonfinite: false };
            }
            stepper.set_dt(halved);
        } else if growth < 1.05 && stepper.dt() < config.dt {
            stepper.set_dt((stepper.dt() * 2.0).min(config.dt));
        }
    };

    let m0 = rows[0].mass;
    let e0 = rows[0].energy;
    let mass_drift = rows.iter().map(|r| (r.mass - m0).abs() / m0.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let energy_drift = rows.iter().map(|r| (r.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    Ok(TrajectoryRecord { rows, outcome, mass_drift, energy_drift, final_state: last_finite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_gaussian, GridSpec};

    #[test]
    fn zero_field_is_fixed() {
        let grid = GridSpec::new(8, 4.0).unwrap();
        let engine = SpectralEngine::new(grid);
        let params = ModelParams::new(3, 3.0, 1.0).unwrap();
        let out = step_strang(&Field::zeros(grid), 0.01, &params, &engine).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn linear_plane_wave_phase() {
        let grid = GridSpec::new(16, 3.0).unwrap();
        let engine = SpectralEngine::new(grid);
        let params = ModelParams::new(3, 3.0, 1.0).unwrap();
        let k0 = [std::f64::consts::PI / 3.0 * 2.0, 0.0, -std::f64::consts::PI / 3.0];
        let f = Field::from_fn(grid, |x| Complex64::from_polar(1.0, k0[0] * x[0] + k0[2] * x[2]));
        let dt = 0.037;
        let out = step_strang_with(&f, dt, &params, &engine, HartreeMode::Periodic, false).unwrap();
        let k2 = k0[0] * k0[0] + k0[2] * k0[2];
        let expected = f.map(|z| z * Complex64::from_polar(1.0, -k2 * dt));
        assert!(out.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn real_field_has_zero_g_prime_and_gaussian_moment() {
        let grid = GridSpec::new(64, 8.0).unwrap();
        let engine = SpectralEngine::new(grid);
        let params = ModelParams::new(3, 3.0, 1.0).unwrap();
        let f = make_gaussian(grid, 1.0, 1.0, [0.0; 3]).unwrap();
        let (g, g_prime, _) = virial_monitors(&f, &params, &engine).unwrap();
        assert_eq!(g_prime, 0.0);
        let exact = 1.5 * std::f64::consts::PI.powf(1.5);
        assert!((g - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn config_validation() {
        assert!(EvolveConfig::default().validate().is_ok());
        assert!(EvolveConfig { blowup_factor: 1.0, ..Default::default() }.validate().is_err());
        assert!(EvolveConfig { dt: 1e-9, ..Default::default() }.validate().is_err());
    }
}
