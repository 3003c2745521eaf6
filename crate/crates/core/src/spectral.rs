//! Fourier engine: transforms, differential multipliers and the Hartree
//! potential `V_H = |x|^{-2} * |psi|^2`.
//!
//! Convention: `f^(k) = int f(x) e^{-ik.x} dx`, discretized as `h^3 DFT`
//! including the phase from the box offset `-L`. Wavenumbers along an axis are
//! `k = (pi / L) m` with `m` in `[-n/2, n/2)`, stored in FFT order.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft3::{Direction, Fft3, PaddedConvolver};
use crate::model::{Field, GridSpec, DEFAULT_TAIL_TOLERANCE, GRID_DIM};
use crate::special::{riesz_constant, sine_integral_unchecked};

/// How the `|x|^{-2}` convolution treats the box boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HartreeMode {
    /// Periodic convolution with the Riesz symbol, zero mode dropped.
    Periodic,
    /// Free-space convolution through a truncated kernel on the 2x padded grid.
    #[default]
    Truncated,
}

impl std::str::FromStr for HartreeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Self::Periodic),
            "truncated" => Ok(Self::Truncated),
            other => Err(Error::InvalidArgument(format!("unknown Hartree mode {other:?}"))),
        }
    }
}

/// Fourier coefficients of a field on its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: GridSpec, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, found {}",
                grid.len(),
                coefficients.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `sum |f^|^2 (dk)^3 / (2 pi)^3` with `dk = pi / L`.
    pub fn parseval_norm_sqr(&self) -> f64 {
        let dk = PI / self.grid.half_length();
        self.coefficients.iter().map(|z| z.norm_sqr()).sum::<f64>() * dk.powi(3) / (2.0 * PI).powi(3)
    }
}

/// Precomputed symbols and FFT plans for one grid.
pub struct SpectralEngine {
    grid: GridSpec,
    wavenumbers: Vec<f64>,
    laplacian_symbol: Vec<f64>,
    riesz_symbol_periodic: Vec<f64>,
    riesz_symbol_truncated: Vec<f64>,
    truncation_radius: f64,
    tail_tolerance: f64,
    fft: Fft3,
    padded: PaddedConvolver,
}

impl std::fmt::Debug for SpectralEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralEngine")
            .field("grid", &self.grid)
            .field("truncation_radius", &self.truncation_radius)
            .field("tail_tolerance", &self.tail_tolerance)
            .finish_non_exhaustive()
    }
}

impl SpectralEngine {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.n();
        let l = grid.half_length();
        let wavenumbers: Vec<f64> = (0..n).map(|j| PI / l * signed_index(j, n) as f64).collect();

        let c_d = riesz_constant(GRID_DIM);
        let mut laplacian_symbol = Vec::with_capacity(grid.len());
        let mut riesz_symbol_periodic = Vec::with_capacity(grid.len());
        for &k1 in &wavenumbers {
            for &k2 in &wavenumbers {
                for &k3 in &wavenumbers {
                    let k_sq = k1 * k1 + k2 * k2 + k3 * k3;
                    laplacian_symbol.push(-k_sq);
                    // |k|^{2-D} with D = 3
                    riesz_symbol_periodic.push(if k_sq == 0.0 { 0.0 } else { c_d / k_sq.sqrt() });
                }
            }
        }

        let padded = PaddedConvolver::new(n);
        // largest radius whose periodic images on the 4L padded box stay outside the sphere
        let truncation_radius = 2.0 * l;
        let dk_pad = PI / (2.0 * l);
        let riesz_symbol_truncated = (0..padded.half_len())
            .map(|idx| {
                let m = padded.half_mode(idx);
                let k = dk_pad * ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64).sqrt();
                truncated_symbol(k, truncation_radius)
            })
            .collect();

        Self {
            grid,
            wavenumbers,
            laplacian_symbol,
            riesz_symbol_periodic,
            riesz_symbol_truncated,
            truncation_radius,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            fft: Fft3::new(n),
            padded,
        }
    }

    /// Overrides the tail-mass tolerance used by support checks.
    pub fn with_tail_tolerance(mut self, tolerance: f64) -> Self {
        self.tail_tolerance = tolerance;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// `-|k|^2` on the `n^3` grid in FFT order.
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.laplacian_symbol
    }

    /// `c_D |k|^{2-D}` on the `n^3` grid, zero at `k = 0`.
    pub fn riesz_symbol_periodic(&self) -> &[f64] {
        &self.riesz_symbol_periodic
    }

    /// `4 pi Si(|k| L_t) / |k|` on the padded grid, half-spectrum layout
    /// `[i1 in 0..2n][i2 in 0..2n][k3 in 0..=n]`.
    pub fn riesz_symbol_truncated(&self) -> &[f64] {
        &self.riesz_symbol_truncated
    }

    /// `L_t = 2 L`.
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// Fails with `SupportViolation` when the field's tail beyond `L/2` is
    /// above the engine tolerance.
    pub fn check_support(&self, field: &Field) -> Result<()> {
        field.check_support(self.tail_tolerance)
    }

    pub fn forward(&self, field: &Field) -> Result<Spectrum> {
        self.grid.ensure_same(field.grid())?;
        let mut data = field.values().to_vec();
        self.fft.process(&mut data, Direction::Forward);
        let h3 = self.grid.cell_volume();
        let n = self.grid.n();
        for (idx, z) in data.iter_mut().enumerate() {
            *z *= h3 * self.offset_phase(idx, n);
        }
        Spectrum::new(self.grid, data)
    }

    pub fn inverse(&self, spectrum: &Spectrum) -> Result<Field> {
        self.grid.ensure_same(spectrum.grid())?;
        let n = self.grid.n();
        let scale = 1.0 / (self.grid.cell_volume() * self.grid.len() as f64);
        let mut data: Vec<Complex64> = spectrum
            .coefficients()
            .iter()
            .enumerate()
            .map(|(idx, &z)| z * self.offset_phase(idx, n) * scale)
            .collect();
        self.fft.process(&mut data, Direction::Inverse);
        Field::new(self.grid, data)
    }

    /// `(-1)^{m1+m2+m3}`, the phase `e^{ik.L}` from sampling at `x = -L + jh`.
    fn offset_phase(&self, idx: usize, n: usize) -> f64 {
        let parity = signed_index(idx / (n * n), n) + signed_index((idx / n) % n, n) + signed_index(idx % n, n);
        if parity.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Raw unnormalized DFT of the samples.
    pub fn dft(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.fft.process(&mut data, Direction::Forward);
        data
    }

    /// Inverse of [`Self::dft`], including the `1/n^3`.
    pub fn idft(&self, mut data: Vec<Complex64>) -> Vec<Complex64> {
        self.fft.process(&mut data, Direction::Inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
        data
    }

    /// Applies a Fourier multiplier given per flat mode index.
    pub fn apply_multiplier(&self, field: &Field, symbol: impl Fn(usize) -> Complex64) -> Result<Field> {
        self.grid.ensure_same(field.grid())?;
        let mut data = self.dft(field.values());
        for (idx, z) in data.iter_mut().enumerate() {
            *z *= symbol(idx);
        }
        Field::new(self.grid, self.idft(data))
    }

    pub fn laplacian(&self, field: &Field) -> Result<Field> {
        self.apply_multiplier(field, |idx| self.laplacian_symbol[idx].into())
    }

    /// Wavevector of flat mode index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let n = self.grid.n();
        [self.wavenumbers[idx / (n * n)], self.wavenumbers[(idx / n) % n], self.wavenumbers[idx % n]]
    }

    /// Spectral gradient; the Nyquist mode of each axis is dropped so real
    /// fields have real derivatives.
    pub fn gradient(&self, field: &Field) -> Result<[Field; 3]> {
        self.grid.ensure_same(field.grid())?;
        let n = self.grid.n();
        let spec = self.dft(field.values());
        let component = |axis: usize| {
            let data: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(idx, &z)| {
                    let j = match axis {
                        0 => idx / (n * n),
                        1 => (idx / n) % n,
                        _ => idx % n,
                    };
                    if j == n / 2 {
                        Complex64::default()
                    } else {
                        z * Complex64::new(0.0, self.wavenumbers[j])
                    }
                })
                .collect();
            Field::new(self.grid, self.idft(data))
        };
        Ok([component(0)?, component(1)?, component(2)?])
    }

    /// `int |grad psi|^2` through Parseval.
    pub fn kinetic(&self, field: &Field) -> Result<f64> {
        self.grid.ensure_same(field.grid())?;
        let spec = self.dft(field.values());
        Ok(self.kinetic_from_dft(&spec))
    }

    pub(crate) fn kinetic_from_dft(&self, spec: &[Complex64]) -> f64 {
        let sum: f64 = spec.iter().zip(&self.laplacian_symbol).map(|(z, s)| -s * z.norm_sqr()).sum();
        sum * self.grid.cell_volume() / self.grid.len() as f64
    }

    /// `V_H = |x|^{-2} * |psi|^2`. Truncated mode checks the support first.
    pub fn hartree_potential(&self, field: &Field, mode: HartreeMode) -> Result<Vec<f64>> {
        self.grid.ensure_same(field.grid())?;
        if mode == HartreeMode::Truncated {
            self.check_support(field)?;
        }
        Ok(self.hartree_of_density(&field.density(), mode))
    }

    /// Hartree potential of a density, without support checks.
    pub fn hartree_of_density(&self, density: &[f64], mode: HartreeMode) -> Vec<f64> {
        match mode {
            HartreeMode::Truncated => self.padded.convolve(density, &self.riesz_symbol_truncated),
            HartreeMode::Periodic => {
                let data: Vec<Complex64> = density.iter().map(|&r| r.into()).collect();
                let mut spec = self.dft(&data);
                for (z, s) in spec.iter_mut().zip(&self.riesz_symbol_periodic) {
                    *z *= *s;
                }
                self.idft(spec).iter().map(|z| z.re).collect()
            }
        }
    }

    /// Periodic Hartree potential by direct summation against kernel samples
    /// obtained from the periodic symbol. Only for `n <= 16`.
    pub fn hartree_potential_direct(&self, field: &Field) -> Result<Vec<f64>> {
        self.grid.ensure_same(field.grid())?;
        let n = self.grid.n();
        if n > 16 {
            return Err(Error::GridTooLarge(n));
        }
        let h3 = self.grid.cell_volume();
        let symbol: Vec<Complex64> = self.riesz_symbol_periodic.iter().map(|&s| s.into()).collect();
        // K(x_j) = (1 / (n h)^3) sum_k s(k) e^{ik.x_j}
        let kernel: Vec<f64> = self.idft(symbol).iter().map(|z| z.re / h3).collect();
        let density = field.density();
        let mut out = vec![0.0; n * n * n];
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let mut acc = 0.0;
                    for j1 in 0..n {
                        let d1 = (i1 + n - j1) % n;
                        for j2 in 0..n {
                            let d2 = (i2 + n - j2) % n;
                            for j3 in 0..n {
                                let d3 = (i3 + n - j3) % n;
                                acc += kernel[(d1 * n + d2) * n + d3] * density[(j1 * n + j2) * n + j3];
                            }
                        }
                    }
                    out[(i1 * n + i2) * n + i3] = acc * h3;
                }
            }
        }
        Ok(out)
    }

    /// `int V_H |psi|^2`.
    pub fn hartree_energy(&self, field: &Field, mode: HartreeMode) -> Result<f64> {
        let potential = self.hartree_potential(field, mode)?;
        Ok(potential.iter().zip(field.values()).map(|(v, z)| v * z.norm_sqr()).sum::<f64>() * self.grid.cell_volume())
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Fourier transform of `|x|^{-2}` restricted to `|x| <= radius` in 3D.
fn truncated_symbol(k: f64, radius: f64) -> f64 {
    if k == 0.0 {
        4.0 * PI * radius
    } else {
        4.0 * PI * sine_integral_unchecked(k * radius) / k
    }
}
