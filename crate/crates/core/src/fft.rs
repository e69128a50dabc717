//! Two-dimensional FFTs on square row-major buffers.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans for an `n x n` transform.
///
/// Transforms are unnormalized: `inverse(forward(x)) = n^2 x`.
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    /// Shared plan for size `n`. Plans are cached for the life of the process.
    pub fn get(n: usize) -> Arc<Fft2> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft2>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft2 {
                    n,
                    fwd: planner.plan_fft_forward(n),
                    inv: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward_pruned(data, 0..self.n);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse_pruned(data, 0..self.n);
    }

    /// Forward transform of a buffer whose rows outside `rows` are zero.
    /// Skipping the zero rows saves a quarter of the work for zero-padded data.
    pub fn forward_pruned(&self, data: &mut [Complex64], rows: Range<usize>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        self.fwd
            .process_with_scratch(&mut data[rows.start * n..rows.end * n], &mut scratch);
        transpose_square(data, n);
        self.fwd.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
    }

    /// Inverse transform where only the rows in `rows` of the result are
    /// needed; other rows are left holding column-transformed intermediates.
    pub fn inverse_pruned(&self, data: &mut [Complex64], rows: Range<usize>) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];
        transpose_square(data, n);
        self.inv.process_with_scratch(data, &mut scratch);
        transpose_square(data, n);
        self.inv
            .process_with_scratch(&mut data[rows.start * n..rows.end * n], &mut scratch);
    }
    /// Periodic convolution `data <- IFFT(m * FFT(data)) / n^2` with the
    /// multiplier given in transposed layout (`mult_t[c * n + r]` multiplies
    /// the coefficient in row `r`, column `c`).
    ///
    /// Rows outside `src` must be zero on entry; only rows in `dst` hold the
    /// result afterwards. The multiplier must include the `1/n^2`
    /// normalization. Working in the transposed layout between the two passes
    /// halves the data movement of a textbook 2-D convolution.
    pub fn convolve(
        &self,
        data: &mut [Complex64],
        src: Range<usize>,
        dst: Range<usize>,
        mult_t: &[Complex64],
        work: &mut Vec<Complex64>,
    ) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        debug_assert_eq!(mult_t.len(), n * n);
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len())];
        self.fwd
            .process_with_scratch(&mut data[src.start * n..src.end * n], &mut scratch);
        work.clear();
        work.resize(n * n, Complex64::new(0.0, 0.0));
        transpose_rows_into(data, work, n, src);
        self.fwd.process_with_scratch(work, &mut scratch);
        for (w, m) in work.iter_mut().zip(mult_t) {
            *w *= m;
        }
        self.inv.process_with_scratch(work, &mut scratch);
        transpose_cols_into(work, data, n, dst.clone());
        self.inv
            .process_with_scratch(&mut data[dst.start * n..dst.end * n], &mut scratch);
    }
}

/// Transposed layout of a row-major square multiplier.
pub fn transposed(m: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut t = m.to_vec();
    transpose_square(&mut t, n);
    t
}

const TILE: usize = 32;

/// `dst[c][r] = src[r][c]` for rows `r` in `rows` and every column `c`.
/// Other entries of `dst` are left untouched.
fn transpose_rows_into(src: &[Complex64], dst: &mut [Complex64], n: usize, rows: Range<usize>) {
    for r0 in rows.clone().step_by(TILE) {
        let r1 = (r0 + TILE).min(rows.end);
        for c0 in (0..n).step_by(TILE) {
            for c in c0..(c0 + TILE).min(n) {
                for r in r0..r1 {
                    dst[c * n + r] = src[r * n + c];
                }
            }
        }
    }
}

/// `dst[r][c] = src[c][r]` for rows `r` in `rows` of `dst` and every column
/// `c`. Other entries of `dst` are left untouched.
fn transpose_cols_into(src: &[Complex64], dst: &mut [Complex64], n: usize, rows: Range<usize>) {
    for r0 in rows.clone().step_by(TILE) {
        let r1 = (r0 + TILE).min(rows.end);
        for c0 in (0..n).step_by(TILE) {
            for r in r0..r1 {
                for c in c0..(c0 + TILE).min(n) {
                    dst[r * n + c] = src[c * n + r];
                }
            }
        }
    }
}

/// In-place transpose of a square row-major matrix, blocked for cache reuse.
fn transpose_square(data: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let jstart = if bi == bj { i + 1 } else { bj };
                for j in jstart..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Signed frequency index for FFT bin `m` of an `n`-point transform,
/// in `[-n/2, n/2)`.
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}
