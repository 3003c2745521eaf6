//! Functionals of the model, scaling laws, Nehari / V = 0 projections,
//! Gagliardo-Nirenberg ratios and the cross-constrained region classifier.
//!
//! Every functional is a combination of four integrals ([`Parts`]):
//! `kinetic = int |grad psi|^2`, `mass = int |psi|^2`, `lp = int |psi|^{p+1}`
//! and `hartree = int (|x|^{-2} * |psi|^2) |psi|^2`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Field, ModelParams, GRID_DIM};
use crate::spectral::{HartreeMode, SpectralEngine};

/// Default relative tolerance of [`classify`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// The four integrals every functional is built from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Parts {
    pub kinetic: f64,
    pub mass: f64,
    pub lp: f64,
    pub hartree: f64,
}

impl Parts {
    pub fn energy(&self, params: &ModelParams) -> f64 {
        self.kinetic / 2.0 - self.hartree / 4.0 - self.lp / (params.p + 1.0)
    }

    pub fn big_k(&self, params: &ModelParams) -> f64 {
        self.kinetic + params.omega * self.mass
    }

    pub fn lagrange(&self, params: &ModelParams) -> f64 {
        self.big_k(params) / 2.0 - self.lp / (params.p + 1.0) - self.hartree / 4.0
    }

    pub fn nehari(&self, params: &ModelParams) -> f64 {
        self.big_k(params) - self.lp - self.hartree
    }

    pub fn vfunc(&self, params: &ModelParams) -> f64 {
        let d = params.d();
        self.kinetic - d * (params.p - 1.0) / (2.0 * (params.p + 1.0)) * self.lp - self.hartree / 2.0
    }

    /// Pieces of `lambda psi`.
    pub fn amplitude_scaled(&self, lambda: f64, p: f64) -> Parts {
        self.with_powers(lambda, [2.0, 2.0, p + 1.0, 4.0])
    }

    fn with_powers(&self, lambda: f64, powers: [f64; 4]) -> Parts {
        Parts {
            kinetic: self.kinetic * lambda.powf(powers[0]),
            mass: self.mass * lambda.powf(powers[1]),
            lp: self.lp * lambda.powf(powers[2]),
            hartree: self.hartree * lambda.powf(powers[3]),
        }
    }
}

/// Sign-pattern region of a field relative to the sub-level set `L < d_N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Region {
    /// `N < 0`, `V < 0`: blow-up region.
    K,
    /// `N < 0`, `V > 0`.
    KPlus,
    /// `N > 0`.
    RPlus,
    Boundary,
    OutsideSublevel,
    #[default]
    Unclassified,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::K => "K",
            Region::KPlus => "K_PLUS",
            Region::RPlus => "R_PLUS",
            Region::Boundary => "BOUNDARY",
            Region::OutsideSublevel => "OUTSIDE_SUBLEVEL",
            Region::Unclassified => "UNCLASSIFIED",
        }
    }

    /// One of the three open regions inside the sub-level set.
    pub fn is_open(&self) -> bool {
        matches!(self, Region::K | Region::KPlus | Region::RPlus)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub mass: f64,
    pub kinetic: f64,
    pub lp: f64,
    pub hartree: f64,
    pub energy: f64,
    pub big_k: f64,
    pub lagrange: f64,
    pub nehari: f64,
    pub vfunc: f64,
    pub region: Region,
}

impl FunctionalReport {
    pub fn from_parts(parts: &Parts, params: &ModelParams) -> Self {
        Self {
            mass: parts.mass,
            kinetic: parts.kinetic,
            lp: parts.lp,
            hartree: parts.hartree,
            energy: parts.energy(params),
            big_k: parts.big_k(params),
            lagrange: parts.lagrange(params),
            nehari: parts.nehari(params),
            vfunc: parts.vfunc(params),
            region: Region::Unclassified,
        }
    }

    pub fn parts(&self) -> Parts {
        Parts { kinetic: self.kinetic, mass: self.mass, lp: self.lp, hartree: self.hartree }
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }
}

/// `int |psi|^r` on the grid.
pub fn lebesgue_integral(field: &Field, r: f64) -> f64 {
    let h3 = field.grid().cell_volume();
    field.values().iter().map(|z| z.norm().powf(r)).sum::<f64>() * h3
}

/// Computes the four integrals with the given Hartree mode.
pub fn parts_with(field: &Field, params: &ModelParams, engine: &SpectralEngine, mode: HartreeMode) -> Result<Parts> {
    let kinetic = engine.kinetic(field)?;
    let hartree = engine.hartree_energy(field, mode)?;
    Ok(Parts { kinetic, mass: field.mass(), lp: lebesgue_integral(field, params.p + 1.0), hartree })
}

pub fn parts(field: &Field, params: &ModelParams, engine: &SpectralEngine) -> Result<Parts> {
    parts_with(field, params, engine, HartreeMode::Truncated)
}

/// All functionals of `field`, free-space Hartree term. Region is left
/// unclassified.
pub fn report(field: &Field, params: &ModelParams, engine: &SpectralEngine) -> Result<FunctionalReport> {
    report_with(field, params, engine, HartreeMode::Truncated)
}

pub fn report_with(
    field: &Field,
    params: &ModelParams,
    engine: &SpectralEngine,
    mode: HartreeMode,
) -> Result<FunctionalReport> {
    Ok(FunctionalReport::from_parts(&parts_with(field, params, engine, mode)?, params))
}

/// `L_1 = K/4 + (1/4 - 1/(p+1)) lp`, so that `L = N/4 + L_1`.
pub fn aux_l1(report: &FunctionalReport, params: &ModelParams) -> f64 {
    report.big_k / 4.0 + (0.25 - 1.0 / (params.p + 1.0)) * report.lp
}

/// `L_2 = (1/2 - 1/(p+1)) K + (1/(p+1) - 1/4) hartree`, so that `L = N/(p+1) + L_2`.
pub fn aux_l2(report: &FunctionalReport, params: &ModelParams) -> f64 {
    let r = 1.0 / (params.p + 1.0);
    (0.5 - r) * report.big_k + (r - 0.25) * report.hartree
}

/// `N - (2/D) V`, zero on solutions of the standing-wave equation.
pub fn pohozaev_residual(report: &FunctionalReport, params: &ModelParams) -> f64 {
    report.nehari - 2.0 / params.d() * report.vfunc
}

/// The scalings used to move along and across the constraint manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingKind {
    /// `lambda psi`
    Amplitude,
    /// `lambda^{D/2} u(lambda x)`, mass preserving.
    MassDilation,
    /// `lambda^{D/(p+1)} psi(lambda x)`, preserves `int |psi|^{p+1}`.
    LpDilation,
    /// `lambda^{2/(p-1)} v(lambda x)`.
    H1Dilation,
}

impl ScalingKind {
    /// Amplitude exponent `alpha` of `lambda^alpha psi(lambda x)`; `None` for
    /// the pure amplitude scaling.
    pub fn dilation_exponent(&self, params: &ModelParams) -> Option<f64> {
        let d = params.d();
        match self {
            ScalingKind::Amplitude => None,
            ScalingKind::MassDilation => Some(d / 2.0),
            ScalingKind::LpDilation => Some(d / (params.p + 1.0)),
            ScalingKind::H1Dilation => Some(2.0 / (params.p - 1.0)),
        }
    }

    /// Powers of `lambda` multiplying `(kinetic, mass, lp, hartree)`.
    pub fn powers(&self, params: &ModelParams) -> [f64; 4] {
        let d = params.d();
        let p = params.p;
        match self.dilation_exponent(params) {
            None => [2.0, 2.0, p + 1.0, 4.0],
            Some(a) => [2.0 * a + 2.0 - d, 2.0 * a - d, (p + 1.0) * a - d, 4.0 * a - 2.0 * d + 2.0],
        }
    }
}

impl std::str::FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "amplitude" => Ok(Self::Amplitude),
            "mass_dilation" => Ok(Self::MassDilation),
            "lp_dilation" => Ok(Self::LpDilation),
            "h1_dilation" => Ok(Self::H1Dilation),
            other => Err(Error::InvalidArgument(format!("unknown scaling {other:?}"))),
        }
    }
}

/// Integrals of the scaled field, from the closed-form lambda powers.
pub fn scaled_parts(parts: &Parts, kind: ScalingKind, lambda: f64, params: &ModelParams) -> Parts {
    parts.with_powers(lambda, kind.powers(params))
}

/// `(L, N, V)` of the scaled field via the analytic lambda expansions.
pub fn scaled_functionals(parts: &Parts, kind: ScalingKind, lambda: f64, params: &ModelParams) -> (f64, f64, f64) {
    let s = scaled_parts(parts, kind, lambda, params);
    (s.lagrange(params), s.nehari(params), s.vfunc(params))
}

/// Resamples `field` under the scaling, using trigonometric interpolation for
/// the dilations. Dilated fields are checked against the engine's support
/// tolerance.
pub fn apply_scaling(
    field: &Field,
    kind: ScalingKind,
    lambda: f64,
    params: &ModelParams,
    engine: &SpectralEngine,
) -> Result<Field> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveLambda(lambda));
    }
    engine.grid().ensure_same(field.grid())?;
    let Some(alpha) = kind.dilation_exponent(params) else {
        return Ok(field.scaled(lambda));
    };
    if kind == ScalingKind::H1Dilation && params.p <= 1.0 {
        return Err(Error::InvalidArgument("H1 dilation needs p > 1".into()));
    }
    let out = dilate(field, lambda)?.scaled(lambda.powf(alpha));
    engine.check_support(&out)?;
    Ok(out)
}

/// `psi(lambda x)` by separable trigonometric interpolation; points that
/// leave the box read as zero.
fn dilate(field: &Field, lambda: f64) -> Result<Field> {
    let grid = *field.grid();
    let n = grid.n();
    let l = grid.half_length();
    // cardinal[i * n + j]: j-th periodic cardinal function at lambda x_i
    let mut cardinal = vec![0.0; n * n];
    for i in 0..n {
        let y = lambda * grid.coord(i);
        if y < -l || y >= l {
            // outside the box the field is taken to vanish rather than wrap
            continue;
        }
        for j in 0..n {
            let t = (y - grid.coord(j)) * std::f64::consts::PI / l;
            cardinal[i * n + j] = periodic_sinc(t, n);
        }
    }
    let mut data = field.values().to_vec();
    let mut tmp = vec![Complex64::default(); data.len()];
    for axis in 0..3 {
        let stride = match axis {
            0 => n * n,
            1 => n,
            _ => 1,
        };
        for (idx, out) in tmp.iter_mut().enumerate() {
            let i = (idx / stride) % n;
            let base = idx - i * stride;
            let row = &cardinal[i * n..(i + 1) * n];
            let mut acc = Complex64::default();
            for (j, &c) in row.iter().enumerate() {
                acc += data[base + j * stride] * c;
            }
            *out = acc;
        }
        std::mem::swap(&mut data, &mut tmp);
    }
    Field::new(grid, data)
}

/// `(1/n) sum_m e^{i m t}` over `m in (-n/2, n/2)` plus `cos(n t / 2) / n` for
/// the Nyquist mode.
fn periodic_sinc(t: f64, n: usize) -> f64 {
    let half = n as f64 / 2.0;
    let s = (t / 2.0).sin();
    if s.abs() < 1e-14 {
        return 1.0;
    }
    // sum_{|m| < n/2} e^{imt} = sin((n-1) t / 2) / sin(t / 2)
    (((half - 0.5) * t).sin() / s + (half * t).cos()) / n as f64
}

fn degenerate(msg: &str) -> Error {
    Error::DegenerateField(msg.into())
}

/// Root `lambda*` of `K = lambda^{p-1} lp + lambda^2 hartree`, i.e.
/// `N[lambda* psi] = 0`.
pub fn nehari_lambda_from_parts(parts: &Parts, params: &ModelParams) -> Result<f64> {
    let k = parts.big_k(params);
    if !(k > 0.0) {
        return Err(degenerate("K must be positive for the Nehari projection"));
    }
    if !(parts.lp + parts.hartree > 0.0) {
        return Err(degenerate("lp + hartree vanishes"));
    }
    let p = params.p;
    let g = |lam: f64| k - lam.powf(p - 1.0) * parts.lp - lam * lam * parts.hartree;
    let dg = |lam: f64| -(p - 1.0) * lam.powf(p - 2.0) * parts.lp - 2.0 * lam * parts.hartree;
    monotone_root(g, dg)
}

/// Bisection to width `1e-10` on a doubling bracket, then two Newton steps.
fn monotone_root(g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64) -> Result<f64> {
    let mut lo = 1e-6;
    let mut hi = 1.0;
    if g(lo) <= 0.0 {
        return Err(degenerate("root below the bracket floor 1e-6"));
    }
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(degenerate("no sign change below 1e12"));
        }
    }
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut lam = 0.5 * (lo + hi);
    for _ in 0..2 {
        let d = dg(lam);
        if d != 0.0 {
            let next = lam - g(lam) / d;
            if next > 0.0 {
                lam = next;
            }
        }
    }
    Ok(lam)
}

pub fn nehari_lambda(field: &Field, params: &ModelParams, engine: &SpectralEngine) -> Result<f64> {
    nehari_lambda_from_parts(&parts(field, params, engine)?, params)
}

/// Mass-dilation factor putting the field on `V = 0`.
///
/// At the mass-critical exponent `V[u_lambda] = lambda^2 V[u]`, so the answer
/// is `1` when `|V| <= tol K` and `None` otherwise.
pub fn v_zero_lambda_from_parts(parts: &Parts, params: &ModelParams, tol: f64) -> Result<Option<f64>> {
    let d = params.d();
    let p = params.p;
    let critical = params.mass_critical_p();
    if (p - critical).abs() <= 1e-12 * critical {
        return Ok((parts.vfunc(params).abs() <= tol * parts.big_k(params)).then_some(1.0));
    }
    if p < critical {
        return Err(Error::ExponentOutOfRange { p, lo: critical, hi: params.energy_critical_p() });
    }
    let balance = parts.kinetic - parts.hartree / 2.0;
    if balance <= 0.0 || parts.lp <= 0.0 {
        return Ok(None);
    }
    let exponent = d * (p - 1.0) / 2.0 - 2.0;
    let base = balance * 2.0 * (p + 1.0) / (d * (p - 1.0) * parts.lp);
    Ok(Some(base.powf(1.0 / exponent)))
}

pub fn v_zero_lambda(field: &Field, params: &ModelParams, engine: &SpectralEngine) -> Result<Option<f64>> {
    v_zero_lambda_from_parts(&parts(field, params, engine)?, params, DEFAULT_CLASSIFY_TOL)
}

/// Places a report inside the sub-level decomposition of `L < d_N`.
pub fn classify(report: &FunctionalReport, d_n: f64, tol: f64) -> Region {
    let scale = tol * report.big_k;
    if report.lagrange >= d_n - tol {
        Region::OutsideSublevel
    } else if report.nehari.abs() <= scale || (report.nehari < 0.0 && report.vfunc.abs() <= scale) {
        Region::Boundary
    } else if report.nehari < 0.0 && report.vfunc < 0.0 {
        Region::K
    } else if report.nehari < 0.0 {
        Region::KPlus
    } else {
        Region::RPlus
    }
}

/// Sharp constants of the power and Hartree Gagliardo-Nirenberg inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnConstants {
    pub q: f64,
    /// `(q + 1) / ||R||_2^{2q}`
    pub c_power: f64,
    /// `2 / ||grad W||_2^2`
    pub c_hartree: f64,
    pub r_norm_sq: f64,
    pub w_grad_norm_sq: f64,
}

impl GnConstants {
    pub fn new(q: f64, r_norm_sq: f64, w_grad_norm_sq: f64) -> Result<Self> {
        if !(r_norm_sq > 0.0 && w_grad_norm_sq > 0.0 && q > 0.0) {
            return Err(Error::InvalidArgument("GN constants need positive q and norms".into()));
        }
        Ok(Self {
            q,
            c_power: (q + 1.0) / r_norm_sq.powf(q),
            c_hartree: 2.0 / w_grad_norm_sq,
            r_norm_sq,
            w_grad_norm_sq,
        })
    }
}

/// `||psi||_{2q+2}^{2q+2} / (C ||grad psi||^{qD} ||psi||^{2+q(2-D)})`.
pub fn gn_ratio_power(field: &Field, constants: &GnConstants, engine: &SpectralEngine) -> Result<f64> {
    let mass = field.mass();
    if mass == 0.0 {
        return Err(Error::ZeroField);
    }
    let q = constants.q;
    let d = GRID_DIM as f64;
    let kinetic = engine.kinetic(field)?;
    let lp = lebesgue_integral(field, 2.0 * q + 2.0);
    Ok(lp / (constants.c_power * kinetic.powf(q * d / 2.0) * mass.powf(1.0 + q * (2.0 - d) / 2.0)))
}

/// `hartree / (C mass kinetic)`.
pub fn gn_ratio_hartree(field: &Field, constants: &GnConstants, engine: &SpectralEngine) -> Result<f64> {
    let mass = field.mass();
    if mass == 0.0 {
        return Err(Error::ZeroField);
    }
    let kinetic = engine.kinetic(field)?;
    let hartree = engine.hartree_energy(field, HartreeMode::Truncated)?;
    Ok(hartree / (constants.c_hartree * mass * kinetic))
}

/// Scalings accepted by [`lambda_derivative_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeKind {
    Amplitude,
    MassDilation,
}

/// Centered finite difference of `lambda -> L[scaled]` (step `1e-5 lambda`)
/// against the closed form: `N[lambda psi] / lambda` for the amplitude,
/// `V[u_lambda] / lambda` for the mass dilation.
pub fn lambda_derivative_check(parts: &Parts, kind: DerivativeKind, lambda: f64, params: &ModelParams) -> (f64, f64) {
    let scaling = match kind {
        DerivativeKind::Amplitude => ScalingKind::Amplitude,
        DerivativeKind::MassDilation => ScalingKind::MassDilation,
    };
    let lag = |lam: f64| scaled_parts(parts, scaling, lam, params).lagrange(params);
    let step = 1e-5 * lambda;
    let lhs = (lag(lambda + step) - lag(lambda - step)) / (2.0 * step);
    let at = scaled_parts(parts, scaling, lambda, params);
    let rhs = match kind {
        DerivativeKind::Amplitude => at.nehari(params),
        DerivativeKind::MassDilation => at.vfunc(params),
    } / lambda;
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_gaussian, GridSpec};

    fn params(p: f64) -> ModelParams {
        ModelParams::new(3, p, 1.0).unwrap()
    }

    fn parts_sample() -> Parts {
        Parts { kinetic: 3.1, mass: 2.2, lp: 1.7, hartree: 0.9 }
    }

    #[test]
    fn zero_field_functionals_vanish() {
        let grid = GridSpec::new(16, 6.0).unwrap();
        let engine = SpectralEngine::new(grid);
        let r = report(&Field::zeros(grid), &params(3.0), &engine).unwrap();
        for v in [r.mass, r.kinetic, r.lp, r.hartree, r.energy, r.big_k, r.lagrange, r.nehari, r.vfunc] {
            assert_eq!(v, 0.0);
        }
        assert_eq!(aux_l1(&r, &params(3.0)), 0.0);
        assert_eq!(aux_l2(&r, &params(3.0)), 0.0);
        assert_eq!(pohozaev_residual(&r, &params(3.0)), 0.0);
    }

    #[test]
    fn omega_zero_gives_k_equal_kinetic() {
        let grid = GridSpec::new(16, 6.0).unwrap();
        let engine = SpectralEngine::new(grid);
        let f = make_gaussian(grid, 0.7, 0.8, [0.0; 3]).unwrap();
        let r = report(&f, &ModelParams::new(3, 2.0, 0.0).unwrap(), &engine).unwrap();
        assert_eq!(r.big_k, r.kinetic);
    }

    #[test]
    fn l1_at_cubic_exponent() {
        let pr = params(3.0);
        let r = FunctionalReport::from_parts(&parts_sample(), &pr);
        assert_eq!(aux_l1(&r, &pr), r.big_k / 4.0);
        assert!((r.lagrange - r.nehari / 4.0 - aux_l1(&r, &pr)).abs() < 1e-15);
    }

    #[test]
    fn scaling_powers() {
        let pr = params(3.0);
        // lp power D (p - 1) / 2 = 3 at D = 3, p = 3
        assert_eq!(ScalingKind::MassDilation.powers(&pr), [2.0, 0.0, 3.0, 2.0]);
        let q = params(2.0);
        let lp = ScalingKind::LpDilation.powers(&q);
        assert!(lp[2].abs() < 1e-15);
        assert!((lp[0] - (2.0 * 3.0 / 3.0 + 2.0 - 3.0)).abs() < 1e-15);
        assert!((lp[3] - (4.0 * 3.0 / 3.0 - 6.0 + 2.0)).abs() < 1e-15);
        // H1 dilation: kinetic power 2 (p+1)/(p-1) - D + ... consistent with lambda^{2/(p-1)}
        let h1 = ScalingKind::H1Dilation.powers(&params(2.5));
        assert!((h1[2] - (2.0 * 3.5 / 1.5 - 3.0)).abs() < 1e-14);
        for kind in [ScalingKind::Amplitude, ScalingKind::MassDilation, ScalingKind::LpDilation, ScalingKind::H1Dilation] {
            let s = scaled_parts(&parts_sample(), kind, 1.0, &pr);
            assert_eq!(s, parts_sample());
        }
    }

    #[test]
    fn nehari_root_cases() {
        let pr = params(2.5);
        let mut parts = parts_sample();
        // put the sample on the Nehari manifold by solving for the mass
        parts.mass = (parts.lp + parts.hartree - parts.kinetic) / pr.omega + 2.0;
        parts.kinetic -= 2.0;
        assert!(parts.nehari(&pr).abs() < 1e-14);
        assert!((nehari_lambda_from_parts(&parts, &pr).unwrap() - 1.0).abs() < 1e-12);

        let toy = Parts { lp: 0.0, ..parts_sample() };
        let exact = (toy.big_k(&pr) / toy.hartree).sqrt();
        assert!((nehari_lambda_from_parts(&toy, &pr).unwrap() - exact).abs() < 1e-12 * exact);

        let empty = Parts { lp: 0.0, hartree: 0.0, ..parts_sample() };
        assert!(matches!(nehari_lambda_from_parts(&empty, &pr), Err(Error::DegenerateField(_))));
    }

    #[test]
    fn v_zero_cases() {
        let pr = params(3.0);
        let small = Parts { kinetic: 1.0, hartree: 2.5, ..parts_sample() };
        assert_eq!(v_zero_lambda_from_parts(&small, &pr, 1e-9).unwrap(), None);
        let mut on = parts_sample();
        on.lp = (on.kinetic - on.hartree / 2.0) * 2.0 * 4.0 / (3.0 * 2.0);
        assert!(on.vfunc(&pr).abs() < 1e-14);
        assert!((v_zero_lambda_from_parts(&on, &pr, 1e-9).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let crit = ModelParams::new(3, 1.0 + 4.0 / 3.0, 1.0).unwrap();
        assert_eq!(v_zero_lambda_from_parts(&parts_sample(), &crit, 1e-9).unwrap(), None);
    }

    #[test]
    fn classification_rules() {
        let pr = params(3.0);
        let tiny = Parts { kinetic: 1e-4, mass: 1e-4, lp: 1e-8, hartree: 1e-8 };
        let r = FunctionalReport::from_parts(&tiny, &pr);
        assert_eq!(classify(&r, 1.0, DEFAULT_CLASSIFY_TOL), Region::RPlus);
        let big = FunctionalReport::from_parts(&Parts { kinetic: 10.0, mass: 10.0, lp: 0.1, hartree: 0.1 }, &pr);
        assert_eq!(classify(&big, 1.0, DEFAULT_CLASSIFY_TOL), Region::OutsideSublevel);
        let mut k = FunctionalReport::from_parts(&tiny, &pr);
        k.nehari = -1e-3;
        k.vfunc = -1e-3;
        k.lagrange = 0.0;
        assert_eq!(classify(&k, 1.0, 1e-9), Region::K);
        k.vfunc = 1e-3;
        assert_eq!(classify(&k, 1.0, 1e-9), Region::KPlus);
        k.vfunc = 0.0;
        assert_eq!(classify(&k, 1.0, 1e-9), Region::Boundary);
    }

    #[test]
    fn dilation_interpolation_is_exact_at_unit_lambda() {
        let grid = GridSpec::new(16, 6.0).unwrap();
        let engine = SpectralEngine::new(grid);
        let f = make_gaussian(grid, 1.0, 0.9, [0.3, -0.2, 0.1]).unwrap();
        for kind in [ScalingKind::MassDilation, ScalingKind::LpDilation, ScalingKind::H1Dilation] {
            let g = apply_scaling(&f, kind, 1.0, &params(2.0), &engine).unwrap();
            assert!(g.max_abs_diff(&f) < 1e-13);
        }
        assert!(matches!(
            apply_scaling(&f, ScalingKind::Amplitude, 0.0, &params(2.0), &engine),
            Err(Error::NonpositiveLambda(_))
        ));
    }

    #[test]
    fn dilation_matches_analytic_gaussian() {
        let grid = GridSpec::new(32, 8.0).unwrap();
        let engine = SpectralEngine::new(grid);
        let sigma = 1.0;
        let f = make_gaussian(grid, 1.0, sigma, [0.0; 3]).unwrap();
        let lambda = 1.3;
        let g = apply_scaling(&f, ScalingKind::MassDilation, lambda, &params(2.0), &engine).unwrap();
        let exact = make_gaussian(grid, lambda.powf(1.5), sigma / lambda, [0.0; 3]).unwrap();
        assert!(g.max_abs_diff(&exact) < 1e-9);
    }

    #[test]
    fn derivative_identities_at_critical_points() {
        let pr = params(3.0);
        let parts = parts_sample();
        let lam = nehari_lambda_from_parts(&parts, &pr).unwrap();
        let (lhs, rhs) = lambda_derivative_check(&parts, DerivativeKind::Amplitude, lam, &pr);
        assert!(rhs.abs() < 1e-12);
        assert!(lhs.abs() < 1e-8);
        if let Some(lv) = v_zero_lambda_from_parts(&parts, &pr, 1e-9).unwrap() {
            let (lhs, rhs) = lambda_derivative_check(&parts, DerivativeKind::MassDilation, lv, &pr);
            assert!(rhs.abs() < 1e-12 && lhs.abs() < 1e-8);
        }
    }
}
