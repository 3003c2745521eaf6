//! Three-dimensional FFTs on row-major cubes, plus the zero-padded real
//! convolution used by the free-space Hartree potential.
//!
//! All transforms are unnormalized; callers apply `1/n^3` on the way back.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Plans for an `n x n x n` complex transform.
pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    fn plan(&self, dir: Direction) -> &Arc<dyn Fft<f64>> {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        }
    }

    pub(crate) fn process(&self, data: &mut [Complex64], dir: Direction) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n * n);
        let fft = self.plan(dir);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut block = vec![Complex64::default(); n * n];

        // last axis: contiguous rows
        fft.process_with_scratch(data, &mut scratch);

        // middle axis: transpose each slab
        for slab in data.chunks_exact_mut(n * n) {
            transpose_into(slab, &mut block, n, n);
            fft.process_with_scratch(&mut block, &mut scratch);
            transpose_into(&block, slab, n, n);
        }

        // first axis: gather one (i, k) plane per j
        for j in 0..n {
            for i in 0..n {
                let src = &data[(i * n + j) * n..(i * n + j + 1) * n];
                for (k, &v) in src.iter().enumerate() {
                    block[k * n + i] = v;
                }
            }
            fft.process_with_scratch(&mut block, &mut scratch);
            for i in 0..n {
                let dst = &mut data[(i * n + j) * n..(i * n + j + 1) * n];
                for (k, v) in dst.iter_mut().enumerate() {
                    *v = block[k * n + i];
                }
            }
        }
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`.
fn transpose_into(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        let row = &src[r * cols..(r + 1) * cols];
        for (c, &v) in row.iter().enumerate() {
            dst[c * rows + r] = v;
        }
    }
}

/// Aperiodic convolution of a real `n^3` density with a kernel whose Fourier
/// symbol is sampled on the `(2n)^3` zero-padded grid.
///
/// The density is transformed with a paired real-to-complex pass along the
/// last axis so only the `n + 1` non-negative last-axis frequencies are kept,
/// and the padding zeros are never transformed along the first two axes.
pub(crate) struct PaddedConvolver {
    n: usize,
    m: usize,
    half: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl PaddedConvolver {
    pub(crate) fn new(n: usize) -> Self {
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        Self {
            n,
            m,
            half: n + 1,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    /// Length of the half-spectrum layout `[i1][i2][k3]`, `k3 in 0..=n`.
    pub(crate) fn half_len(&self) -> usize {
        self.m * self.m * self.half
    }

    /// Signed padded-grid frequency index of flat half-spectrum position `idx`.
    pub(crate) fn half_mode(&self, idx: usize) -> [i64; 3] {
        let m = self.m;
        let k3 = idx % self.half;
        let i2 = (idx / self.half) % m;
        let i1 = idx / (self.half * m);
        let signed = |i: usize| if i < m / 2 { i as i64 } else { i as i64 - m as i64 };
        [signed(i1), signed(i2), k3 as i64]
    }

    /// Returns `IDFT(symbol * DFT(pad(density)))` cropped to the original box.
    pub(crate) fn convolve(&self, density: &[f64], symbol: &[f64]) -> Vec<f64> {
        let (n, m, half) = (self.n, self.m, self.half);
        debug_assert_eq!(density.len(), n * n * n);
        debug_assert_eq!(symbol.len(), self.half_len());

        let zero = Complex64::default();
        let mut spec = vec![zero; m * m * half];
        let scratch_len = self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len());
        let mut scratch = vec![zero; scratch_len];
        let mut line = vec![zero; m];
        let mut block = vec![zero; m * half];

        // last axis: two real rows per complex transform
        let rows = n * n;
        let mut r = 0;
        while r < rows {
            let a = &density[r * n..(r + 1) * n];
            let b = if r + 1 < rows { Some(&density[(r + 1) * n..(r + 2) * n]) } else { None };
            for k in 0..m {
                line[k] = if k < n {
                    Complex64::new(a[k], b.map_or(0.0, |b| b[k]))
                } else {
                    zero
                };
            }
            self.forward.process_with_scratch(&mut line, &mut scratch);
            for (q, row) in [r, r + 1].into_iter().enumerate() {
                if row >= rows {
                    break;
                }
                let (i1, i2) = (row / n, row % n);
                let base = (i1 * m + i2) * half;
                for k in 0..half {
                    let z = line[k];
                    let zc = line[(m - k) % m].conj();
                    spec[base + k] = if q == 0 {
                        (z + zc) * 0.5
                    } else {
                        (z - zc) * Complex64::new(0.0, -0.5)
                    };
                }
            }
            r += 2;
        }

        // middle axis, forward: slabs i1 < n, rows i2 < n populated
        for i1 in 0..n {
            let slab = &mut spec[i1 * m * half..(i1 + 1) * m * half];
            for i2 in 0..m {
                for k in 0..half {
                    block[k * m + i2] = if i2 < n { slab[i2 * half + k] } else { zero };
                }
            }
            self.forward.process_with_scratch(&mut block, &mut scratch);
            for i2 in 0..m {
                for k in 0..half {
                    slab[i2 * half + k] = block[k * m + i2];
                }
            }
        }

        // first axis: forward, multiply, inverse; only rows i1 < n are kept
        for i2 in 0..m {
            for i1 in 0..m {
                for k in 0..half {
                    block[k * m + i1] = if i1 < n { spec[(i1 * m + i2) * half + k] } else { zero };
                }
            }
            self.forward.process_with_scratch(&mut block, &mut scratch);
            for i1 in 0..m {
                for k in 0..half {
                    block[k * m + i1] *= symbol[(i1 * m + i2) * half + k];
                }
            }
            self.inverse.process_with_scratch(&mut block, &mut scratch);
            for i1 in 0..n {
                for k in 0..half {
                    spec[(i1 * m + i2) * half + k] = block[k * m + i1];
                }
            }
        }

        // middle axis, inverse
        for i1 in 0..n {
            let slab = &mut spec[i1 * m * half..(i1 + 1) * m * half];
            for i2 in 0..m {
                for k in 0..half {
                    block[k * m + i2] = slab[i2 * half + k];
                }
            }
            self.inverse.process_with_scratch(&mut block, &mut scratch);
            for i2 in 0..n {
                for k in 0..half {
                    slab[i2 * half + k] = block[k * m + i2];
                }
            }
        }

        // last axis: two Hermitian half-spectra per complex inverse transform
        let norm = 1.0 / (m * m * m) as f64;
        let mut out = vec![0.0; n * n * n];
        let mut r = 0;
        while r < rows {
            let (a1, a2) = (r / n, r % n);
            let base_a = (a1 * m + a2) * half;
            let has_b = r + 1 < rows;
            let base_b = if has_b { ((r + 1) / n * m + (r + 1) % n) * half } else { 0 };
            let i = Complex64::new(0.0, 1.0);
            for k in 0..m {
                let (ka, conj) = if k <= n { (k, false) } else { (m - k, true) };
                let mut a = spec[base_a + ka];
                let mut b = if has_b { spec[base_b + ka] } else { zero };
                if conj {
                    a = a.conj();
                    b = b.conj();
                }
                line[k] = a + i * b;
            }
            self.inverse.process_with_scratch(&mut line, &mut scratch);
            for k in 0..n {
                out[r * n + k] = line[k].re * norm;
                if has_b {
                    out[(r + 1) * n + k] = line[k].im * norm;
                }
            }
            r += 2;
        }
        out
    }
}
