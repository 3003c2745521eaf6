//! Model parameters, grid geometry, and sampled fields.
//!
//! Gridded quantities live on the periodic cube `[-L, L)^3` with `n` points per
//! axis. Sample `(i, j, k)` sits at `(-L + i h, -L + j h, -L + k h)` with
//! `h = 2L / n`, stored row-major so that the last index is contiguous.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dimension of every gridded operation.
pub const GRID_DIM: u32 = 3;

/// Default bound on the fraction of mass allowed outside radius `L/2` before a
/// free-space operation reports a support violation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-2;

/// Dimension, perturbation exponent and frequency of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub dim: u32,
    pub p: f64,
    pub omega: f64,
}

impl ModelParams {
    /// Builds validated parameters.
    pub fn new(dim: u32, p: f64, omega: f64) -> Result<Self> {
        let params = Self { dim, p, omega };
        validate_params(&params)?;
        Ok(params)
    }

    pub fn d(&self) -> f64 {
        self.dim as f64
    }

    /// `1 + 4/D`, the mass-critical power.
    pub fn mass_critical_p(&self) -> f64 {
        1.0 + 4.0 / self.d()
    }

    /// `1 + 4/(D-2)`, the energy-critical power.
    pub fn energy_critical_p(&self) -> f64 {
        1.0 + 4.0 / (self.d() - 2.0)
    }

    /// Coefficient `D(p-1)/(2(p+1))` of the power term in the virial functional.
    pub fn virial_lp_coefficient(&self) -> f64 {
        self.d() * (self.p - 1.0) / (2.0 * (self.p + 1.0))
    }

    /// Checks the band `1 + 4/D <= p < 1 + 4/(D-2)` required by the
    /// cross-constrained variational problems and the blow-up dichotomy.
    pub fn require_supercritical_band(&self) -> Result<()> {
        let lo = self.mass_critical_p();
        let hi = self.energy_critical_p();
        if self.p < lo || self.p >= hi {
            return Err(Error::ExponentOutOfRange { p: self.p, lo, hi });
        }
        Ok(())
    }

    /// Checks `1 < p < 1 + 4/D`, the orbital-stability regime.
    pub fn require_subcritical_band(&self) -> Result<()> {
        let hi = self.mass_critical_p();
        if self.p <= 1.0 || self.p >= hi {
            return Err(Error::ExponentOutOfRange { p: self.p, lo: 1.0, hi });
        }
        Ok(())
    }
}

/// Checks `D >= 3` and `1 < p < 1 + 4/(D-2)`.
pub fn validate_params(params: &ModelParams) -> Result<()> {
    if params.dim < 3 {
        return Err(Error::DimensionTooSmall(params.dim));
    }
    let hi = params.energy_critical_p();
    if !(params.p > 1.0 && params.p < hi) {
        return Err(Error::ExponentOutOfRange { p: params.p, lo: 1.0, hi });
    }
    if !params.omega.is_finite() {
        return Err(Error::InvalidArgument(format!("omega = {} is not finite", params.omega)));
    }
    Ok(())
}

/// Periodic cubic grid `[-L, L)^3` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_length: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidGrid(format!("half length L = {half_length} must be positive")));
        }
        Ok(Self { n, half_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Volume element `h^3`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `j` along any axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Position of flat sample index `idx`.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.coord(idx / (n * n)), self.coord((idx / n) % n), self.coord(idx % n)]
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.half_length.to_bits() == other.half_length.to_bits()
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_n: self.n,
                expected_l: self.half_length,
                found_n: other.n,
                found_l: other.half_length,
            })
        }
    }
}

/// Complex field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, found {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples a function of position.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self { grid, values }
    }

    /// Samples a real profile of position.
    pub fn from_real_fn(grid: GridSpec, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Pointwise density `|psi|^2`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `sum |psi|^2 h^3`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Field {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&z| f(z)).collect() }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Field, factor: f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b * factor).collect();
        Ok(Field { grid: self.grid, values })
    }

    /// Fraction of the mass located outside the ball of radius `radius`.
    pub fn tail_mass_fraction(&self, radius: f64) -> f64 {
        let total: f64 = self.values.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let r2 = radius * radius;
        let outside: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let x = self.grid.position(*idx);
                x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > r2
            })
            .map(|(_, z)| z.norm_sqr())
            .sum();
        outside / total
    }

    /// Fails with `SupportViolation` when more than `tolerance` of the mass
    /// lies outside radius `L/2`.
    pub fn check_support(&self, tolerance: f64) -> Result<()> {
        let frac = self.tail_mass_fraction(0.5 * self.grid.half_length());
        if frac > tolerance {
            return Err(Error::SupportViolation(format!(
                "{frac:.3e} of the mass lies outside radius L/2 (tolerance {tolerance:.1e})"
            )));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Samples `a exp(-|x - x0|^2 / (2 sigma^2))`.
///
/// Requires `|x0| + 4 sigma < L` so that the periodic wrap is negligible.
pub fn make_gaussian(grid: GridSpec, amplitude: f64, width: f64, center: [f64; 3]) -> Result<Field> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("Gaussian width {width} must be positive")));
    }
    let offset = (center[0].powi(2) + center[1].powi(2) + center[2].powi(2)).sqrt();
    if offset + 4.0 * width >= grid.half_length() {
        return Err(Error::SupportViolation(format!(
            "|x0| + 4 sigma = {} must stay below L = {}",
            offset + 4.0 * width,
            grid.half_length()
        )));
    }
    let inv = 1.0 / (2.0 * width * width);
    Ok(Field::from_real_fn(grid, |x| {
        let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) + (x[2] - center[2]).powi(2);
        amplitude * (-r2 * inv).exp()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(3, 2.0, 1.0).is_ok());
        assert!(matches!(ModelParams::new(3, 5.0, 1.0), Err(Error::ExponentOutOfRange { .. })));
        assert!(matches!(ModelParams::new(2, 1.5, 1.0), Err(Error::DimensionTooSmall(2))));
        assert!(matches!(ModelParams::new(3, 1.0, 1.0), Err(Error::ExponentOutOfRange { .. })));
        // D = 4: 1 < p < 3
        assert!(ModelParams::new(4, 2.9, 1.0).is_ok());
        assert!(ModelParams::new(4, 3.0, 1.0).is_err());
    }

    #[test]
    fn supercritical_band() {
        let params = ModelParams::new(3, 7.0 / 3.0, 1.0).unwrap();
        assert!(params.require_supercritical_band().is_ok());
        let params = ModelParams::new(3, 2.0, 1.0).unwrap();
        assert!(params.require_supercritical_band().is_err());
        assert!(params.require_subcritical_band().is_ok());
    }

    #[test]
    fn grid_rules() {
        assert!(GridSpec::new(4, 1.0).is_err());
        assert!(GridSpec::new(24, 1.0).is_err());
        assert!(GridSpec::new(16, 0.0).is_err());
        let g = GridSpec::new(16, 4.0).unwrap();
        assert_eq!(g.spacing() * 16.0, 8.0);
        assert_eq!(g.coord(0), -4.0);
        assert_eq!(g.position(g.index(1, 2, 3)), [g.coord(1), g.coord(2), g.coord(3)]);
    }

    #[test]
    fn gaussian_mass() {
        let g = GridSpec::new(64, 8.0).unwrap();
        let zero = make_gaussian(g, 0.0, 1.0, [0.0; 3]).unwrap();
        assert_eq!(zero.mass(), 0.0);
        // exp(-|x|^2 / 2) squared integrates to pi^{3/2}
        let f = make_gaussian(g, 1.0, 1.0, [0.0; 3]).unwrap();
        assert!((f.mass() - PI.powf(1.5)).abs() < 1e-12 * PI.powf(1.5));
        let f2 = make_gaussian(g, 2.0, 1.0, [0.0; 3]).unwrap();
        assert!((f2.mass() - 4.0 * f.mass()).abs() < 1e-12 * f2.mass());
        assert!(f.values().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn gaussian_mass_spectral_convergence() {
        let sigma: f64 = 1.0;
        let exact = PI.powf(1.5) * sigma.powi(3);
        for n in [64usize, 128] {
            let g = GridSpec::new(n, 8.0).unwrap();
            assert!(sigma >= 4.0 * g.spacing());
            let f = make_gaussian(g, 1.0, sigma, [0.0; 3]).unwrap();
            assert!((f.mass() - exact).abs() < 1e-10 * exact, "n = {n}");
        }
    }

    #[test]
    fn gaussian_support_guard() {
        let g = GridSpec::new(16, 4.0).unwrap();
        assert!(matches!(make_gaussian(g, 1.0, 1.0, [0.5, 0.0, 0.0]), Err(Error::SupportViolation(_))));
        assert!(make_gaussian(g, 1.0, 0.5, [1.0, 0.0, 0.0]).is_ok());
    }
}
