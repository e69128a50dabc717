//! Executable checks of the identities satisfied by scattering data, CGO and
//! D-bar solutions and reconstructed potentials, with uniform reporting.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::data::{Potential, ScatteringData, Variant};
use crate::dbar::{DbarOptions, DbarProblem};
use crate::error::{NvError, Result};
use crate::grid::{ComplexField, Grid2D};

/// Outcome of one check. `pass` holds exactly when
/// `relative_violation <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub max_abs_violation: f64,
    pub relative_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub metadata: Vec<(String, String)>,
}

impl CheckReport {
    /// Report for a violation measured against `scale`. A zero violation is
    /// relative zero even when the scale is zero.
    pub fn new(name: &str, max_abs: f64, scale: f64, tolerance: f64) -> Self {
        let relative = if max_abs == 0.0 { 0.0 } else { max_abs / scale };
        Self::from_relative(name, max_abs, relative, tolerance)
    }

    /// Report whose relative violation is computed by the caller.
    pub fn from_relative(name: &str, max_abs: f64, relative: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            max_abs_violation: max_abs,
            relative_violation: relative,
            tolerance,
            pass: relative <= tolerance,
            metadata: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    /// Machine-readable `key:value` lines, prefixed with the check name.
    pub fn to_key_value(&self) -> String {
        let mut out = format!(
            "{n}.pass:{}\n{n}.max_abs_violation:{:e}\n{n}.relative_violation:{:e}\n{n}.tolerance:{:e}\n",
            self.pass,
            self.max_abs_violation,
            self.relative_violation,
            self.tolerance,
            n = self.name
        );
        for (k, v) in &self.metadata {
            out.push_str(&format!("{}.{k}:{v}\n", self.name));
        }
        out
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: relative {:.3e} (tolerance {:.1e}, max abs {:.3e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.relative_violation,
            self.tolerance,
            self.max_abs_violation
        )?;
        for (k, v) in &self.metadata {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Points per axis of the interpolation stencil used for k-plane data.
pub const STENCIL: usize = 8;

/// Tensor-product Lagrange interpolation of degree `stencil - 1` around `p`
/// (`stencil` even). `None` when the stencil leaves the grid.
pub fn interpolate_lagrange(f: &ComplexField, p: Complex64, stencil: usize) -> Option<Complex64> {
    let grid = f.grid();
    let n = grid.n() as i64;
    let h = grid.spacing();
    let s = grid.half_width();
    let x = (p.re + s) / h;
    let y = (p.im + s) / h;
    let (i0, j0) = (x.floor() as i64, y.floor() as i64);
    let lo = stencil as i64 / 2 - 1;
    let hi = stencil as i64 / 2;
    if i0 - lo < 0 || j0 - lo < 0 || i0 + hi >= n || j0 + hi >= n {
        return None;
    }
    let wx = lagrange_weights(x - i0 as f64, stencil);
    let wy = lagrange_weights(y - j0 as f64, stencil);
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, &wyb) in wy.iter().enumerate() {
        let j = (j0 - lo + b as i64) as usize;
        let mut row = Complex64::new(0.0, 0.0);
        for (a, &wxa) in wx.iter().enumerate() {
            let i = (i0 - lo + a as i64) as usize;
            row += wxa * f.get(i, j);
        }
        acc += wyb * row;
    }
    Some(acc)
}

/// Lagrange weights of the nodes `1 - m/2, ..., m/2` at `u` in `[0, 1)`.
fn lagrange_weights(u: f64, m: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (0..m).map(|a| a as f64 + 1.0 - (m / 2) as f64).collect();
    nodes
        .iter()
        .enumerate()
        .map(|(a, &xa)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(_, &xb)| (u - xb) / (xa - xb))
                .product()
        })
        .collect()
}

/// Trigonometric interpolant of a periodic grid field: the inverse DFT
/// evaluated off the grid. The Nyquist terms use cosines so real samples give
/// real values.
pub struct FourierInterpolant {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl FourierInterpolant {
    pub fn new(f: &ComplexField) -> Self {
        let grid = *f.grid();
        let n = grid.n();
        let mut coeffs = f.values().to_vec();
        crate::fft::Fft2::get(n).forward(&mut coeffs);
        let norm = 1.0 / (n * n) as f64;
        coeffs.iter_mut().for_each(|c| *c *= norm);
        Self { grid, coeffs }
    }

    fn basis(&self, x: f64) -> Vec<Complex64> {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let t = (x + self.grid.half_width()) / h;
        (0..n)
            .map(|m| {
                let freq = 2.0 * PI * crate::fft::signed_index(m, n) as f64 / n as f64;
                if m == n / 2 {
                    Complex64::new((PI * t).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, freq * t)
                }
            })
            .collect()
    }

    pub fn eval(&self, p: Complex64) -> Complex64 {
        let n = self.grid.n();
        let bx = self.basis(p.re);
        let by = self.basis(p.im);
        let mut acc = Complex64::new(0.0, 0.0);
        for (row, &b2) in by.iter().enumerate() {
            let line = &self.coeffs[row * n..(row + 1) * n];
            let inner: Complex64 = line.iter().zip(&bx).map(|(&c, &b1)| c * b1).sum();
            acc += b2 * inner;
        }
        acc
    }
}

/// Largest `|f(k) - f(e^{+-i angle} k)|` over samples with `|k| <= radius`,
/// the rotated values interpolated by `interp`.
fn rotation_violation(
    f: &ComplexField,
    angle: f64,
    radius: f64,
    interp: impl Fn(Complex64) -> Option<Complex64> + Sync,
) -> f64 {
    let grid = f.grid();
    let rot = [Complex64::from_polar(1.0, angle), Complex64::from_polar(1.0, -angle)];
    let worst = crate::par::map(grid.len(), crate::par::Execution::default(), |idx| {
        let k = grid.point_flat(idx);
        if k.norm() > radius {
            return 0.0;
        }
        rot.iter()
            .filter_map(|&r| interp(r * k))
            .map(|v| (f.values()[idx] - v).norm())
            .fold(0.0, f64::max)
    });
    worst.into_iter().fold(0.0, f64::max)
}

fn ensure_same_grid(a: &ScatteringData, b: &ScatteringData) -> Result<()> {
    if a.grid().same_sampling(b.grid()) {
        Ok(())
    } else {
        Err(NvError::GridMismatch("scattering data of the two variants".into()))
    }
}

/// Indices whose image under `k -> -conj(k)` is a grid sample.
fn mirrored(grid: &Grid2D) -> impl Iterator<Item = usize> + '_ {
    (0..grid.len()).filter(move |&i| i % grid.n() != 0)
}

/// `conj(t+(k)) = t-(-conj k)`, relative to `max |t+|`.
pub fn check_conj_pair(tplus: &ScatteringData, tminus: &ScatteringData, tol: f64) -> Result<CheckReport> {
    ensure_same_grid(tplus, tminus)?;
    let grid = tplus.grid();
    let (p, m) = (tplus.field().values(), tminus.field().values());
    let worst = mirrored(grid)
        .map(|i| (p[i].conj() - m[grid.neg_conj_index(i)]).norm())
        .fold(0.0, f64::max);
    Ok(CheckReport::new("conj_pair", worst, tplus.field().max_abs(), tol).with_meta("tau", tplus.tau()))
}

/// `t+ = t-`, which holds for real radial potentials.
pub fn check_plus_minus_equal(tplus: &ScatteringData, tminus: &ScatteringData, tol: f64) -> Result<CheckReport> {
    ensure_same_grid(tplus, tminus)?;
    let diff = tplus.field().sub(tminus.field())?;
    Ok(CheckReport::new("plus_minus_equal", diff.max_abs(), tplus.field().max_abs(), tol).with_meta("tau", tplus.tau()))
}

/// Rotation invariance and reality of `t`. Ring deviation is measured
/// against the mean over samples at exactly the same radius.
pub fn check_radial_real(t: &ScatteringData, tol: f64) -> CheckReport {
    let grid = t.grid();
    let v = t.field().values();
    let mut rings: std::collections::BTreeMap<i64, (Complex64, usize)> = Default::default();
    for (i, &val) in v.iter().enumerate() {
        let e = rings.entry(grid.radius2_units(i)).or_insert((Complex64::new(0.0, 0.0), 0));
        e.0 += val;
        e.1 += 1;
    }
    let ring_dev = (0..grid.len())
        .map(|i| {
            let (sum, count) = rings[&grid.radius2_units(i)];
            (v[i] - sum / count as f64).norm()
        })
        .fold(0.0, f64::max);
    let im = t.field().max_abs_im();
    let scale = t.field().max_abs();
    CheckReport::new("radial_real", ring_dev.max(im), scale, tol)
        .with_meta("ring_deviation", format!("{:e}", ring_dev))
        .with_meta("max_abs_im", format!("{:e}", im))
}

/// Invariance of `t` under rotation by `2 pi / fold`, comparing against
/// Lagrange interpolation of the rotated samples. Samples closer to the
/// truncation circle than the stencil reach are excluded, so that stencils
/// never straddle the jump at `k_max`.
pub fn check_rotational(t: &ScatteringData, fold: u32, tol: f64) -> CheckReport {
    let reach = (STENCIL / 2) as f64 * std::f64::consts::SQRT_2;
    let radius = t.k_max().min(t.grid().half_width()) - reach * t.grid().spacing();
    let f = &with_origin_filled(t.field());
    let worst = rotation_violation(f, 2.0 * PI / fold as f64, radius, |p| interpolate_lagrange(f, p, STENCIL));
    CheckReport::new(&format!("rotation_{fold}fold"), worst, t.field().max_abs(), tol)
        .with_meta("tau", t.tau())
        .with_meta("hierarchy_n", t.hierarchy_n())
}

/// Copy of scattering data with the `k = 0` sample, which is stored as zero,
/// replaced by fourth-order extrapolation along both axes, so that
/// interpolation stencils covering the origin see a smooth field.
fn with_origin_filled(f: &ComplexField) -> ComplexField {
    let grid = f.grid();
    let c = grid.n() / 2;
    let mut out = f.clone();
    if c >= 2 && c + 2 < grid.n() {
        let axis = |a: Complex64, b: Complex64, d: Complex64, e: Complex64| (4.0 * (a + b) - (d + e)) / 6.0;
        let along_x = axis(f.get(c - 1, c), f.get(c + 1, c), f.get(c - 2, c), f.get(c + 2, c));
        let along_y = axis(f.get(c, c - 1), f.get(c, c + 1), f.get(c, c - 2), f.get(c, c + 2));
        out.values_mut()[grid.origin_flat()] = 0.5 * (along_x + along_y);
    }
    out
}

/// Threefold rotation symmetry of evolved radial data.
pub fn check_threefold(t: &ScatteringData, tol: f64) -> CheckReport {
    check_rotational(t, 3, tol)
}

/// Reality, threefold rotation symmetry and reflection symmetry
/// `q(z) = conj(q(conj z))` of a reconstructed potential. Rotated values come
/// from the trigonometric interpolant, which is exact for the band-limited
/// output of a reconstruction.
pub fn check_q_symmetries(q: &Potential, tol: f64) -> CheckReport {
    let f = q.field();
    let grid = q.grid();
    let scale = f.max_abs();
    let im = f.max_abs_im();
    let radius = grid.half_width() - 3.0 * grid.spacing();
    let interp = FourierInterpolant::new(f);
    let rot = rotation_violation(f, 2.0 * PI / 3.0, radius, |p| Some(interp.eval(p)));
    let n = grid.n();
    let refl = (0..grid.len())
        .filter(|&i| i / n != 0)
        .map(|i| (f.values()[i] - f.values()[grid.conj_index(i)].conj()).norm())
        .fold(0.0, f64::max);
    let rel = |v: f64| if v == 0.0 { 0.0 } else { v / scale };
    CheckReport::new("q_symmetries", im.max(rot).max(refl), scale, tol)
        .with_meta("imaginary", format!("{:e}", rel(im)))
        .with_meta("threefold", format!("{:e}", rel(rot)))
        .with_meta("reflection", format!("{:e}", rel(refl)))
}

/// `mu-(z, k) = conj(mu+(z, -conj k))` from the two D-bar equations.
pub fn check_mu_conjugation(
    tplus: &ScatteringData,
    tminus: &ScatteringData,
    z: Complex64,
    options: DbarOptions,
    tol: f64,
) -> Result<CheckReport> {
    ensure_same_grid(tplus, tminus)?;
    if tplus.variant() != Variant::Plus || tminus.variant() != Variant::Minus {
        return Err(NvError::InvalidArgument(
            "mu conjugation compares plus data with minus data".into(),
        ));
    }
    let plus = DbarProblem::new(tplus, options).solve(z)?;
    let minus = DbarProblem::new(tminus, options).solve(z)?;
    let grid = tplus.grid();
    let worst = mirrored(grid)
        .map(|i| (minus.mu.values()[i] - plus.mu.values()[grid.neg_conj_index(i)].conj()).norm())
        .fold(0.0, f64::max);
    Ok(CheckReport::new("mu_conjugation", worst, plus.mu.max_abs(), tol)
        .with_meta("z", z)
        .with_meta("iterations", format!("{}/{}", plus.iterations, minus.iterations)))
}

/// Largest slope allowed for the ring-sup trend in [`decay_fit`].
pub const DECAY_SLOPE_TOL: f64 = 0.1;

/// Checks that `|f(z)| (1 + |z|)^power` shows no growth over the outer half
/// of the grid: the least-squares slope of the log ring-sup against `log |z|`
/// over rings of width `h` in `s/2 <= |z| <= s - h` must be at most 0.1.
/// The fitted bound `C = max ring-sup` is recorded in the metadata.
pub fn decay_fit(f: &ComplexField, power: u32) -> CheckReport {
    let grid = f.grid();
    let s = grid.half_width();
    let h = grid.spacing();
    let bins = ((s / 2.0 - h) / h).floor() as usize;
    let mut sup = vec![0.0f64; bins];
    for (i, &v) in f.values().iter().enumerate() {
        let r = grid.point_flat(i).norm();
        if r < s / 2.0 || r > s - h {
            continue;
        }
        let b = (((r - s / 2.0) / h) as usize).min(bins - 1);
        sup[b] = sup[b].max(v.norm() * (1.0 + r).powi(power as i32));
    }
    let points: Vec<(f64, f64)> = sup
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(b, &v)| ((s / 2.0 + (b as f64 + 0.5) * h).ln(), v.ln()))
        .collect();
    let name = format!("decay_power{power}");
    let constant = sup.iter().cloned().fold(0.0, f64::max);
    if points.len() < 2 {
        return CheckReport::from_relative(&name, 0.0, 0.0, DECAY_SLOPE_TOL).with_meta("constant", constant);
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    CheckReport::from_relative(&name, slope, slope, DECAY_SLOPE_TOL).with_meta("constant", format!("{constant:e}"))
}
