//! Distance from a field to the phase/translation orbit of a profile in H^1.

use hartree::{Field, Result, SpectralEngine};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitDistanceResult {
    pub distance_h1: f64,
    /// Grid offsets `y` of the winning translate `u(. - y h)`, in `(-n/2, n/2]`.
    pub best_shift: [i64; 3],
    pub best_phase: f64,
}

/// `||f||_{H^1}^2 = int |f|^2 + |grad f|^2`.
pub fn h1_norm_sq(field: &Field, engine: &SpectralEngine) -> Result<f64> {
    Ok(field.mass() + engine.kinetic(field)?)
}

pub fn h1_distance(a: &Field, b: &Field, engine: &SpectralEngine) -> Result<f64> {
    Ok(h1_norm_sq(&a.add_scaled(b, -1.0)?, engine)?.sqrt())
}

/// Periodic translate `u(x - y h)` by whole grid cells.
pub fn shift_field(u: &Field, shift: [i64; 3]) -> Field {
    let grid = *u.grid();
    let n = grid.n() as i64;
    let src = u.values();
    let wrap = |j: usize, s: i64| (j as i64 - s).rem_euclid(n) as usize;
    let mut out = Field::zeros(grid);
    let dst = out.values_mut();
    for i in 0..grid.n() {
        for j in 0..grid.n() {
            for k in 0..grid.n() {
                dst[grid.index(i, j, k)] = src[grid.index(wrap(i, shift[0]), wrap(j, shift[1]), wrap(k, shift[2]))];
            }
        }
    }
    out
}

/// Minimizes `||f - e^{i theta} u(. - y)||_{H^1}` over the phase and all `n^3`
/// grid shifts.
///
/// The H^1 inner products `<u(. - y), f>` for every shift come from one FFT of
/// `conj(f^) u^ (1 + |k|^2)`; the best shift maximizes their modulus and
/// `theta = -arg` of the winner. The distance itself is evaluated directly.
pub fn orbit_distance(f: &Field, u: &Field, engine: &SpectralEngine) -> Result<OrbitDistanceResult> {
    let grid = *engine.grid();
    grid.ensure_same(f.grid())?;
    grid.ensure_same(u.grid())?;
    let n = grid.n();
    let f_hat = engine.dft(f.values());
    let u_hat = engine.dft(u.values());
    let weighted: Vec<Complex64> = f_hat
        .iter()
        .zip(&u_hat)
        .zip(engine.laplacian_symbol())
        .map(|((a, b), s)| a.conj() * b * (1.0 - s))
        .collect();
    let correlation = engine.dft(&weighted);
    let (best, winner) = correlation
        .iter()
        .enumerate()
        .fold((0, Complex64::default()), |acc, (idx, &c)| if c.norm() > acc.1.norm() { (idx, c) } else { acc });
    let signed = |j: usize| if j > n / 2 { j as i64 - n as i64 } else { j as i64 };
    let best_shift = [signed(best / (n * n)), signed((best / n) % n), signed(best % n)];
    let best_phase = if winner.norm() > 0.0 { -winner.arg() } else { 0.0 };
    let rotation = Complex64::from_polar(1.0, best_phase);
    let candidate = shift_field(u, best_shift).map(|z| z * rotation);
    Ok(OrbitDistanceResult { distance_h1: h1_distance(f, &candidate, engine)?, best_shift, best_phase })
}
