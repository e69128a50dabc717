//! Spectral calculus on uniform grids: derivatives, the inverse of the
//! `dbar` operator, the solid Cauchy transform and grid `L^p` norms.
//!
//! Functions are expanded in plane waves `exp(i xi . z)`; under that
//! convention `d/dz -> (i xi1 + xi2)/2`, `d/dzbar -> (i xi1 - xi2)/2` and the
//! Laplacian maps to `-|xi|^2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{NvError, Result};
use crate::fft::{signed_index, transposed, Fft2};
use crate::grid::{pairwise_sum, ComplexField, Grid2D};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Differential operators available through [`spectral_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    /// `d/dz = (d/dx - i d/dy)/2`.
    Dz,
    /// `d/dzbar = (d/dx + i d/dy)/2`.
    Dzbar,
    /// `d/dx`.
    Dx,
    /// `d/dy`.
    Dy,
    /// `d^2/dx^2 + d^2/dy^2`.
    Laplacian,
    /// `(d/dz)^3`.
    Dz3,
    /// `(d/dzbar)^3`.
    Dzbar3,
}

/// Angular frequencies of the FFT bins along one axis. The Nyquist bin is
/// returned separately as a flag so odd-order symbols can zero it.
pub(crate) fn axis_frequencies(grid: &Grid2D) -> Vec<(f64, bool)> {
    let n = grid.n();
    let dxi = 2.0 * PI / (n as f64 * grid.spacing());
    (0..n)
        .map(|m| {
            let s = signed_index(m, n);
            (s as f64 * dxi, m == n / 2)
        })
        .collect()
}

impl DiffOp {
    /// Fourier symbol at `(xi1, xi2)`, with odd-order factors switched off
    /// on the Nyquist bins so that real fields stay real.
    pub(crate) fn symbol(self, (x1, nyq1): (f64, bool), (x2, nyq2): (f64, bool)) -> Complex64 {
        let o1 = if nyq1 { 0.0 } else { x1 };
        let o2 = if nyq2 { 0.0 } else { x2 };
        let dz = Complex64::new(o2, o1) * 0.5;
        let dzbar = Complex64::new(-o2, o1) * 0.5;
        match self {
            DiffOp::Dz => dz,
            DiffOp::Dzbar => dzbar,
            DiffOp::Dx => Complex64::new(0.0, o1),
            DiffOp::Dy => Complex64::new(0.0, o2),
            DiffOp::Laplacian => Complex64::new(-(x1 * x1 + x2 * x2), 0.0),
            DiffOp::Dz3 => dz * dz * dz,
            DiffOp::Dzbar3 => dzbar * dzbar * dzbar,
        }
    }
}

/// Applies a Fourier multiplier `m(xi1, xi2)` to a field.
pub fn apply_multiplier(
    f: &ComplexField,
    m: impl Fn((f64, bool), (f64, bool)) -> Complex64,
) -> ComplexField {
    let grid = *f.grid();
    let n = grid.n();
    let freqs = axis_frequencies(&grid);
    let plan = Fft2::get(n);
    let mut data = f.values().to_vec();
    plan.forward(&mut data);
    let norm = 1.0 / (n * n) as f64;
    for (row, chunk) in data.chunks_mut(n).enumerate() {
        for (col, v) in chunk.iter_mut().enumerate() {
            *v *= m(freqs[col], freqs[row]) * norm;
        }
    }
    plan.inverse(&mut data);
    ComplexField::from_values(grid, data).expect("length preserved")
}

/// Spectral derivative of a field that is effectively periodic on its box.
pub fn spectral_derivative(f: &ComplexField, op: DiffOp) -> ComplexField {
    apply_multiplier(f, |a, b| op.symbol(a, b))
}

/// Solves `dbar g = f` spectrally; the zero-frequency mode of `g` is set to 0.
pub fn dbar_inverse_z(f: &ComplexField) -> ComplexField {
    apply_multiplier(f, |a, b| {
        let s = DiffOp::Dzbar.symbol(a, b);
        if s == Complex64::new(0.0, 0.0) {
            s
        } else {
            1.0 / s
        }
    })
}

/// `v = dbar^{-1} d q`, the auxiliary field of the Novikov-Veselov equation.
pub fn dbar_inverse_dz(q: &ComplexField) -> ComplexField {
    apply_multiplier(q, |a, b| {
        let num = DiffOp::Dz.symbol(a, b);
        let den = DiffOp::Dzbar.symbol(a, b);
        if den == Complex64::new(0.0, 0.0) {
            Complex64::new(0.0, 0.0)
        } else {
            num / den
        }
    })
}

/// Grid `L^p` norm `(sum |f|^p h^2)^(1/p)` for `p > 1`.
pub fn lp_norm(f: &ComplexField, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(NvError::InvalidArgument(format!(
            "L^p exponent must be finite and > 1, got {p}"
        )));
    }
    let s = pairwise_sum(f.values(), |v| v.norm().powf(p));
    Ok((s * f.grid().cell_area()).powf(1.0 / p))
}

/// Discretization of the solid Cauchy transform
/// `(C phi)(k) = (1/pi) int phi(k') / (k - k') dk'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CauchyKernel {
    /// Midpoint rule with the `1/(pi k)` kernel; the singular sample is 0.
    Midpoint,
    /// Exact Fourier transform of the kernel truncated to `|k| <= 2s`,
    /// `-2i (1 - J0(2s |eta|)) / (eta1 + i eta2)`. Exact for band-limited data
    /// supported in the disc `|k| <= s` and evaluated in that disc.
    TruncatedSpectral,
}

impl CauchyKernel {
    pub fn tag(self) -> &'static str {
        match self {
            CauchyKernel::Midpoint => "midpoint",
            CauchyKernel::TruncatedSpectral => "truncated-spectral",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "midpoint" => Ok(CauchyKernel::Midpoint),
            "truncated-spectral" => Ok(CauchyKernel::TruncatedSpectral),
            other => Err(NvError::Format(format!("unknown Cauchy kernel `{other}`"))),
        }
    }
}

/// Precomputed Fourier multiplier of the Cauchy transform on the doubled
/// (zero-padded) grid.
pub struct CauchyOperator {
    grid: Grid2D,
    padded: Grid2D,
    multiplier: Vec<Complex64>,
}

impl CauchyOperator {
    /// Shared operator for a grid and kernel choice.
    pub fn get(grid: &Grid2D, kernel: CauchyKernel) -> Arc<CauchyOperator> {
        type Key = (usize, u64, CauchyKernel);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<CauchyOperator>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (grid.n(), grid.half_width().to_bits(), kernel);
        if let Some(op) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return op.clone();
        }
        let op = Arc::new(Self::build(grid, kernel));
        cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, op.clone());
        op
    }

    fn build(grid: &Grid2D, kernel: CauchyKernel) -> Self {
        let padded = grid.doubled();
        let nn = padded.n();
        let h = grid.spacing();
        let norm = 1.0 / (nn * nn) as f64;
        let multiplier = match kernel {
            CauchyKernel::Midpoint => {
                let mut samples = vec![Complex64::new(0.0, 0.0); nn * nn];
                for row in 0..nn {
                    for col in 0..nn {
                        if row == nn / 2 || col == nn / 2 || (row == 0 && col == 0) {
                            continue;
                        }
                        let w = Complex64::new(
                            signed_index(col, nn) as f64 * h,
                            signed_index(row, nn) as f64 * h,
                        );
                        samples[row * nn + col] = 1.0 / (PI * w);
                    }
                }
                Fft2::get(nn).forward(&mut samples);
                samples.iter().map(|&v| v * (h * h * norm)).collect()
            }
            CauchyKernel::TruncatedSpectral => {
                let freqs = axis_frequencies(&padded);
                let radius = 2.0 * grid.half_width();
                let mut m = vec![Complex64::new(0.0, 0.0); nn * nn];
                for row in 0..nn {
                    for col in 0..nn {
                        let (e1, ny1) = freqs[col];
                        let (e2, ny2) = freqs[row];
                        if ny1 || ny2 || (row == 0 && col == 0) {
                            continue;
                        }
                        let zeta = Complex64::new(e1, e2);
                        let r = zeta.norm();
                        let factor = 1.0 - libm::j0(radius * r);
                        m[row * nn + col] = -2.0 * I * factor / zeta * norm;
                    }
                }
                m
            }
        };
        Self {
            grid: *grid,
            padded,
            multiplier: transposed(&multiplier, nn),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Applies the transform to raw samples on the operator's grid.
    /// `out` receives the transform on the same grid.
    pub fn apply_into(&self, phi: &[Complex64], out: &mut [Complex64], scratch: &mut CauchyScratch) {
        let n = self.grid.n();
        let nn = self.padded.n();
        let off = nn / 2 - n / 2;
        let CauchyScratch { padded: work, transform } = scratch;
        work.clear();
        work.resize(nn * nn, Complex64::new(0.0, 0.0));
        for j in 0..n {
            let dst = (j + off) * nn + off;
            work[dst..dst + n].copy_from_slice(&phi[j * n..(j + 1) * n]);
        }
        Fft2::get(nn).convolve(work, off..off + n, off..off + n, &self.multiplier, transform);
        for j in 0..n {
            let src = (j + off) * nn + off;
            out[j * n..(j + 1) * n].copy_from_slice(&work[src..src + n]);
        }
    }
}

/// Reusable buffers for [`CauchyOperator::apply_into`].
#[derive(Debug, Default)]
pub struct CauchyScratch {
    padded: Vec<Complex64>,
    transform: Vec<Complex64>,
}

/// Solid Cauchy transform of a field on a k-grid, evaluated on the same grid.
pub fn cauchy_transform(phi: &ComplexField, kernel: CauchyKernel) -> ComplexField {
    let op = CauchyOperator::get(phi.grid(), kernel);
    let mut out = vec![Complex64::new(0.0, 0.0); phi.grid().len()];
    op.apply_into(phi.values(), &mut out, &mut CauchyScratch::default());
    ComplexField::from_values(*phi.grid(), out).expect("length preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Plane;

    fn gauss(grid: Grid2D) -> ComplexField {
        ComplexField::from_real_fn(grid, |z| (-z.norm_sqr()).exp())
    }

    #[test]
    fn laplacian_of_gaussian() {
        let g = Grid2D::new(128, 8.0, Plane::Z).unwrap();
        let lap = spectral_derivative(&gauss(g), DiffOp::Laplacian);
        let exact = ComplexField::from_real_fn(g, |z| {
            let r2 = z.norm_sqr();
            (4.0 * r2 - 4.0) * (-r2).exp()
        });
        assert!(lap.rel_l2_error(&exact).unwrap() <= 1e-6);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = Grid2D::new(32, 4.0, Plane::Z).unwrap();
        let one = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        assert!(spectral_derivative(&one, DiffOp::Dz).max_abs() < 1e-15);
    }

    #[test]
    fn dbar_inverse_recovers_gaussian_minus_mean() {
        let g = Grid2D::new(128, 8.0, Plane::Z).unwrap();
        let f = gauss(g);
        let back = dbar_inverse_z(&spectral_derivative(&f, DiffOp::Dzbar));
        let mean = f.mean();
        let expect = f.map(|v| v - mean);
        assert!(back.sub(&expect).unwrap().l2_norm() <= 1e-6);
        let zero = ComplexField::zeros(g);
        assert_eq!(dbar_inverse_z(&zero).max_abs(), 0.0);
    }

    #[test]
    fn lp_norm_examples() {
        let g = Grid2D::new(64, 4.0, Plane::Z).unwrap();
        let one = ComplexField::constant(g, Complex64::new(1.0, 0.0));
        assert!((lp_norm(&one, 2.0).unwrap() - 8.0).abs() < 1e-12);
        let g = Grid2D::new(256, 8.0, Plane::Z).unwrap();
        let v = lp_norm(&gauss(g), 2.0).unwrap();
        assert!((v - (PI / 2.0).sqrt()).abs() < 1e-6);
        assert!(lp_norm(&one, 1.0).is_err());
        assert!(lp_norm(&one, f64::INFINITY).is_err());
    }

    #[test]
    fn cauchy_of_zero_is_zero() {
        let g = Grid2D::new(32, 4.0, Plane::K).unwrap();
        for kernel in [CauchyKernel::Midpoint, CauchyKernel::TruncatedSpectral] {
            let c = cauchy_transform(&ComplexField::zeros(g), kernel);
            assert_eq!(c.max_abs(), 0.0);
        }
    }
}
