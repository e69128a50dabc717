//! Helpers shared by the integration tests.

#![allow(dead_code)]

use num_complex::Complex64;
use nvism::ComplexField;

/// Fourth-order central difference of `dbar = (d/dx + i d/dy) / 2` at
/// sample `(i, j)`; the caller keeps two samples away from the edge.
pub fn dbar_fd(f: &ComplexField, i: usize, j: usize) -> Complex64 {
    let h = f.grid().spacing();
    let d = |a: Complex64, b: Complex64, c: Complex64, e: Complex64| (8.0 * (b - a) - (e - c)) / (12.0 * h);
    let dx = d(f.get(i - 1, j), f.get(i + 1, j), f.get(i - 2, j), f.get(i + 2, j));
    let dy = d(f.get(i, j - 1), f.get(i, j + 1), f.get(i, j - 2), f.get(i, j + 2));
    0.5 * (dx + Complex64::i() * dy)
}

/// Relative L2 distance of `a` from `b` over the samples selected by `keep`.
pub fn rel_l2_where(a: &[Complex64], b: &[Complex64], keep: impl Fn(usize) -> bool) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for idx in (0..a.len()).filter(|&i| keep(i)) {
        num += (a[idx] - b[idx]).norm_sqr();
        den += b[idx].norm_sqr();
    }
    (num / den).sqrt()
}
