//! Uniform square grids and complex fields sampled on them.

use num_complex::Complex64;

use crate::error::{NvError, Result};

/// Which complex plane a grid discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    /// Physical variable `z = x + iy`.
    Z,
    /// Spectral variable `k = k1 + i k2`.
    K,
}

impl Plane {
    pub fn tag(self) -> &'static str {
        match self {
            Plane::Z => "z",
            Plane::K => "k",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "z" => Ok(Plane::Z),
            "k" => Ok(Plane::K),
            other => Err(NvError::Format(format!("unknown plane tag `{other}`"))),
        }
    }
}

/// Uniform `n x n` grid on the box `[-s, s)^2` with the origin on a sample.
///
/// Sample `(i, j)` sits at `(-s + i h, -s + j h)` where `i` indexes the real
/// axis and `j` the imaginary axis. Fields are stored row-major with `j` as
/// the row index, so the flat index of `(i, j)` is `j * n + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n: usize,
    s: f64,
    plane: Plane,
}

impl Grid2D {
    /// Creates a grid, rejecting `n` that is not a power of two (or is below 8)
    /// and non-positive or non-finite half-widths.
    pub fn new(n: usize, s: f64, plane: Plane) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(NvError::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(NvError::InvalidGrid(format!(
                "half-width s = {s} must be positive and finite"
            )));
        }
        Ok(Self { n, s, plane })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.s
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    /// Sample spacing `h = 2s / n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.s / self.n as f64
    }

    /// Area element `h^2` used by grid quadrature.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the origin along either axis.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Flat index of the origin sample.
    pub fn origin_flat(&self) -> usize {
        self.flat(self.n / 2, self.n / 2)
    }

    /// Coordinate of index `i` along an axis.
    pub fn coord(&self, i: usize) -> f64 {
        // Integer offsets from the origin keep symmetric samples exactly symmetric.
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    /// Complex coordinate of sample `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.coord(i), self.coord(j))
    }

    /// Complex coordinate of the sample with flat index `idx`.
    pub fn point_flat(&self, idx: usize) -> Complex64 {
        self.point(idx % self.n, idx / self.n)
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Flat index of the mirror image under `z -> conj(z)`, wrapping the
    /// boundary row onto itself.
    pub fn conj_index(&self, idx: usize) -> usize {
        let (i, j) = (idx % self.n, idx / self.n);
        self.flat(i, (self.n - j) % self.n)
    }

    /// Flat index of the mirror image under `z -> -conj(z)`.
    pub fn neg_conj_index(&self, idx: usize) -> usize {
        let (i, j) = (idx % self.n, idx / self.n);
        self.flat((self.n - i) % self.n, j)
    }

    /// Flat index of the image under `z -> -z`.
    pub fn neg_index(&self, idx: usize) -> usize {
        let (i, j) = (idx % self.n, idx / self.n);
        self.flat((self.n - i) % self.n, (self.n - j) % self.n)
    }

    /// Squared distance from the origin in units of `h^2`, exact in integers.
    pub fn radius2_units(&self, idx: usize) -> i64 {
        let c = (self.n / 2) as i64;
        let di = (idx % self.n) as i64 - c;
        let dj = (idx / self.n) as i64 - c;
        di * di + dj * dj
    }

    /// Whether `idx` lies on the outermost ring of samples.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let (i, j) = (idx % self.n, idx / self.n);
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// Grid with the same spacing and twice as many samples per axis.
    pub fn doubled(&self) -> Self {
        Self {
            n: 2 * self.n,
            s: 2.0 * self.s,
            plane: self.plane,
        }
    }

    /// True when both grids have identical sampling.
    pub fn same_sampling(&self, other: &Grid2D) -> bool {
        self.n == other.n && self.s == other.s && self.plane == other.plane
    }

    pub(crate) fn ensure_same(&self, other: &Grid2D, what: &str) -> Result<()> {
        if self.same_sampling(other) {
            Ok(())
        } else {
            Err(NvError::GridMismatch(format!(
                "{what}: ({}, {}, {}) vs ({}, {}, {})",
                self.n,
                self.s,
                self.plane.tag(),
                other.n,
                other.s,
                other.plane.tag()
            )))
        }
    }
}

/// Complex samples on a [`Grid2D`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid2D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Wraps existing samples, checking the length invariant.
    pub fn from_values(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(NvError::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples a function of the complex coordinate.
    pub fn from_fn(grid: Grid2D, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.point_flat(idx))).collect();
        Self { grid, values }
    }

    /// Samples a real function of the complex coordinate.
    pub fn from_real_fn(grid: Grid2D, f: impl Fn(Complex64) -> f64) -> Self {
        Self::from_fn(grid, |z| Complex64::new(f(z), 0.0))
    }

    pub fn grid(&self) -> &Grid2D {
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

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.flat(i, j)]
    }

    /// Value at the origin sample.
    pub fn at_origin(&self) -> Complex64 {
        self.values[self.grid.origin_flat()]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "zip_map")?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ComplexField) -> Result<Self> {
        self.zip_map(other, |a, b| a * b)
    }

    /// Field `f(conj(z))`, i.e. the mirror image across the real axis.
    pub fn reflect_conj(&self) -> Self {
        let values = (0..self.grid.len())
            .map(|idx| self.values[self.grid.conj_index(idx)])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Field `f(-conj(z))`, the mirror image across the imaginary axis.
    pub fn reflect_neg_conj(&self) -> Self {
        let values = (0..self.grid.len())
            .map(|idx| self.values[self.grid.neg_conj_index(idx)])
            .collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_re(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.re.abs()))
    }

    pub fn max_abs_im(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// Discrete L2 norm with the grid's area element.
    pub fn l2_norm(&self) -> f64 {
        (pairwise_sum(&self.values, |v| v.norm_sqr()) * self.grid.cell_area()).sqrt()
    }

    /// Grid quadrature of the field, `sum f h^2`.
    pub fn integral(&self) -> Complex64 {
        let re = pairwise_sum(&self.values, |v| v.re);
        let im = pairwise_sum(&self.values, |v| v.im);
        Complex64::new(re, im) * self.grid.cell_area()
    }

    /// Mean value over all samples.
    pub fn mean(&self) -> Complex64 {
        self.integral() / (self.grid.cell_area() * self.grid.len() as f64)
    }

    /// True when every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Maximum of `|f|` over the outermost ring of samples.
    pub fn boundary_max_abs(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&idx| self.grid.on_boundary(idx))
            .fold(0.0, |m, idx| m.max(self.values[idx].norm()))
    }

    /// Relative L2 distance `||self - other|| / ||other||`, or the absolute
    /// distance when `other` vanishes.
    pub fn rel_l2_error(&self, reference: &ComplexField) -> Result<f64> {
        let diff = self.sub(reference)?.l2_norm();
        let scale = reference.l2_norm();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    /// Copies the samples into a grid with the same spacing and more samples,
    /// centred so that the origins coincide. New samples are zero.
    pub fn embed(&self, target: Grid2D) -> Result<Self> {
        if target.spacing() != self.grid.spacing() || target.n() < self.grid.n() {
            return Err(NvError::GridMismatch(
                "embedding requires equal spacing and a larger target".into(),
            ));
        }
        let off = target.origin_index() - self.grid.origin_index();
        let n = self.grid.n();
        let mut out = ComplexField::zeros(target);
        for j in 0..n {
            let src = &self.values[j * n..(j + 1) * n];
            let start = target.flat(off, j + off);
            out.values[start..start + n].copy_from_slice(src);
        }
        Ok(out)
    }

    /// Inverse of [`ComplexField::embed`]: crops the centred block of `target` size.
    pub fn crop(&self, target: Grid2D) -> Result<Self> {
        if target.spacing() != self.grid.spacing() || target.n() > self.grid.n() {
            return Err(NvError::GridMismatch(
                "cropping requires equal spacing and a smaller target".into(),
            ));
        }
        let off = self.grid.origin_index() - target.origin_index();
        let n = target.n();
        let mut values = Vec::with_capacity(target.len());
        for j in 0..n {
            let start = self.grid.flat(off, j + off);
            values.extend_from_slice(&self.values[start..start + n]);
        }
        Ok(Self {
            grid: target,
            values,
        })
    }
}

/// Pairwise (cascade) summation in fixed order for reproducible reductions.
pub fn pairwise_sum<T>(items: &[T], f: impl Fn(&T) -> f64 + Copy) -> f64 {
    const LEAF: usize = 64;
    if items.len() <= LEAF {
        return items.iter().map(f).sum();
    }
    let mid = items.len() / 2;
    pairwise_sum(&items[..mid], f) + pairwise_sum(&items[mid..], f)
}

/// Complex counterpart of [`pairwise_sum`].
pub fn pairwise_sum_complex(items: &[Complex64]) -> Complex64 {
    Complex64::new(pairwise_sum(items, |v| v.re), pairwise_sum(items, |v| v.im))
}
