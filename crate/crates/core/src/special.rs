//! Special functions needed by the kernel symbols.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sine integral `Si(x) = int_0^x sin(t)/t dt` for `x >= 0`.
///
/// Power series below 4, continued fraction for `E1(ix)` above.
pub fn sine_integral(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeArgument(x));
    }
    Ok(sine_integral_unchecked(x))
}

pub(crate) fn sine_integral_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return FRAC_PI_2;
    }
    if x < 4.0 {
        // sum_k (-1)^k x^{2k+1} / ((2k+1) (2k+1)!)
        let x2 = x * x;
        let mut term = x; // x^{2k+1} / (2k+1)!
        let mut sum = x;
        let mut k = 0usize;
        loop {
            k += 1;
            let a = (2 * k) as f64;
            term *= -x2 / (a * (a + 1.0));
            let contrib = term / (a + 1.0);
            sum += contrib;
            if contrib.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    // modified Lentz evaluation of E1(ix) e^{ix}
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..10_000 {
        let a = -((i - 1) * (i - 1)) as f64;
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    FRAC_PI_2 + h.im
}

/// `Gamma(s)` for `s` a positive integer or half-integer.
pub(crate) fn gamma_half_integer(s: f64) -> f64 {
    let twice = (2.0 * s).round();
    debug_assert!((2.0 * s - twice).abs() < 1e-12 && twice >= 1.0);
    let twice = twice as u64;
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|k| k as f64).product()
    } else {
        // Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!) = sqrt(pi) prod_{j<k} (j + 1/2)
        let k = (twice - 1) / 2;
        PI.sqrt() * (0..k).map(|j| j as f64 + 0.5).product::<f64>()
    }
}

/// Fourier constant of `|x|^{-2}` in dimension `dim` under `f^(k) = int f e^{-ik.x} dx`:
/// `c_D = 2^{D-2} pi^{D/2} Gamma((D-2)/2) / Gamma(1)`.
pub fn riesz_constant(dim: u32) -> f64 {
    let d = dim as f64;
    2f64.powf(d - 2.0) * PI.powf(d / 2.0) * gamma_half_integer((d - 2.0) / 2.0)
}
