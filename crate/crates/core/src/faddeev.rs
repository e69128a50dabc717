//! Direct problem: the Faddeev Green's function, complex geometrical optics
//! solutions and the scattering transforms.
//!
//! Convolution with `g_k` (the fundamental solution of `-Laplacian - 4ik dbar`)
//! is done with a periodic kernel on a zero-padded grid. The kernel is
//! `chi g_k` with `chi` a smooth radial cutoff, whose Fourier coefficients are
//! obtained without ever sampling the logarithmic singularity: applying the
//! operator to `chi g_k` gives `delta + rho`, where `rho` only involves
//! derivatives of `chi` and is smooth and supported in the cutoff annulus. The
//! coefficients are `(1 + rho^) / sigma` with the operator symbol
//! `sigma = |xi|^2 + 2k (xi1 + i xi2)`, and the mean is fixed by testing
//! against `conj(z)`, which the adjoint operator maps to the constant `4ik`.
//! The periodic kernel equals `g_k` exactly on all source-target distances
//! below the inner cutoff radius.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::data::{Potential, ScatteringData, Variant};
use crate::error::{NvError, Result};
use crate::fft::{transposed, Fft2};
use crate::gmres::{gmres, GmresConfig, GmresInfo};
use crate::grid::{pairwise_sum_complex, ComplexField, Grid2D, Plane};
use crate::par::{self, Execution};
use crate::spectral::axis_frequencies;
use crate::special::{faddeev_g1, SmoothCutoff};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Relative magnitude below which potential samples count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-13;

/// Symbol samples smaller than this are replaced by a neighbour average.
const SINGULAR_SYMBOL: f64 = 1e-8;

/// Minimum width of the cutoff annulus in grid cells, so that the transition
/// (one twelfth of the width) spans at least two cells.
const MIN_ANNULUS_CELLS: f64 = 24.0;

/// Widest annulus used; wider ones only cost more kernel evaluations.
const MAX_ANNULUS_WIDTH: f64 = 4.0;

/// Largest zero-padding factor tried before giving up.
const MAX_PADDING: usize = 8;

/// Periodic grid and cutoff radii for one family of convolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPlan {
    padded: Grid2D,
    cutoff: SmoothCutoff,
}

impl KernelPlan {
    /// Chooses the smallest zero padding of `grid` for which the periodic
    /// kernel is exact between sources within `r_source` and targets within
    /// `r_target` of the origin.
    pub fn new(grid: &Grid2D, r_source: f64, r_target: f64) -> Result<Self> {
        let h = grid.spacing();
        let inner = r_source + r_target + h;
        let mut factor = 1;
        while factor <= MAX_PADDING {
            let period = 2.0 * grid.half_width() * factor as f64;
            let room = period - 2.0 * inner;
            if room >= MIN_ANNULUS_CELLS * h {
                let padded = Grid2D::new(grid.n() * factor, grid.half_width() * factor as f64, grid.plane())?;
                let outer = inner + room.min(MAX_ANNULUS_WIDTH.max(MIN_ANNULUS_CELLS * h));
                return Ok(Self {
                    padded,
                    cutoff: SmoothCutoff::new(inner, outer),
                });
            }
            factor *= 2;
        }
        Err(NvError::InvalidArgument(format!(
            "no padding up to {MAX_PADDING}x fits sources within {r_source} and targets within {r_target}"
        )))
    }

    pub fn padded(&self) -> &Grid2D {
        &self.padded
    }

    pub fn cutoff(&self) -> &SmoothCutoff {
        &self.cutoff
    }
}

/// Fourier multiplier of the periodic Faddeev kernel for one `k`, stored in
/// transposed layout.
pub struct FaddeevKernel {
    k: Complex64,
    grid: Grid2D,
    multiplier: Vec<Complex64>,
}

/// Commutator density `rho = L_k(chi g_k) - delta` as `(di, dj, value)` at
/// the lattice offsets inside the cutoff annulus.
fn annulus_density(k: Complex64, plan: &KernelPlan) -> Vec<(i64, i64, Complex64)> {
    let cut = plan.cutoff;
    let h = plan.padded.spacing();
    let reach = (cut.outer() / h).ceil() as i64;
    let mut out = Vec::new();
    for dj in -reach..=reach {
        for di in -reach..=reach {
            let z = Complex64::new(di as f64 * h, dj as f64 * h);
            let r = z.norm();
            if r <= cut.inner() || r >= cut.outer() {
                continue;
            }
            let (d1, d2) = cut.derivatives(r);
            let kz = k * z;
            let g = faddeev_g1(kz);
            let osc = Complex64::from_polar(1.0, -2.0 * kz.re);
            out.push((di, dj, -(d2 + d1 / r) * g + (d1 / (2.0 * PI * r)) * (ONE + osc)));
        }
    }
    out
}

/// `i^turns k`, exact in floating point.
fn quarter_turn(k: Complex64, turns: usize) -> Complex64 {
    (0..turns % 4).fold(k, |w, _| Complex64::new(-w.im, w.re))
}

impl FaddeevKernel {
    pub fn new(k: Complex64, plan: &KernelPlan) -> Result<Self> {
        if k == ZERO {
            return Err(NvError::InvalidArgument(
                "the Faddeev kernel is undefined at k = 0".into(),
            ));
        }
        Ok(Self::from_density(k, 0, plan, &annulus_density(k, plan)))
    }

    /// The kernel for `i^turns k` from the annulus density of `k`.
    ///
    /// Since `g_{ik}(z) = g_k(iz)`, rotating `k` by a quarter turn rotates the
    /// density the other way, and the lattice is invariant under that.
    fn from_density(k: Complex64, turns: usize, plan: &KernelPlan, density: &[(i64, i64, Complex64)]) -> Self {
        let k = quarter_turn(k, turns);
        let grid = plan.padded;
        let n = grid.n();
        let h = grid.spacing();
        let area = h * h;
        let mut rho = vec![ZERO; n * n];
        let mut moment = ZERO;
        let wrap = |d: i64| d.rem_euclid(n as i64) as usize;
        for &(ei, ej, val) in density {
            // Offset d with i^turns d = e.
            let (di, dj) = (0..turns % 4).fold((ei, ej), |(a, b), _| (b, -a));
            rho[wrap(dj) * n + wrap(di)] += val;
            moment += val * Complex64::new(di as f64 * h, -(dj as f64) * h);
        }
        let mean = moment * area / (4.0 * Complex64::i() * k);
        Fft2::get(n).forward(&mut rho);

        let freqs = axis_frequencies(&grid);
        let norm = 1.0 / (n * n) as f64;
        let mut multiplier = vec![ZERO; n * n];
        let mut singular = Vec::new();
        for row in 0..n {
            let (x2, _) = freqs[row];
            for col in 0..n {
                let (x1, _) = freqs[col];
                let idx = row * n + col;
                if idx == 0 {
                    multiplier[idx] = mean;
                    continue;
                }
                let sigma = Complex64::new(x1 * x1 + x2 * x2, 0.0) + 2.0 * k * Complex64::new(x1, x2);
                if sigma.norm() < SINGULAR_SYMBOL {
                    singular.push(idx);
                    continue;
                }
                multiplier[idx] = (ONE + rho[idx] * area) / sigma;
            }
        }
        for &idx in &singular {
            let (row, col) = (idx / n, idx % n);
            let neighbours = [
                ((row + 1) % n, col),
                ((row + n - 1) % n, col),
                (row, (col + 1) % n),
                (row, (col + n - 1) % n),
            ];
            let mut acc = ZERO;
            let mut count = 0.0;
            for (r, c) in neighbours {
                let j = r * n + c;
                if !singular.contains(&j) {
                    acc += multiplier[j];
                    count += 1.0;
                }
            }
            multiplier[idx] = if count > 0.0 { acc / count } else { ZERO };
        }
        for m in &mut multiplier {
            *m *= norm;
        }
        Self {
            k,
            grid,
            multiplier: transposed(&multiplier, n),
        }
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Convolves a buffer on the padded grid in place. Rows outside `src`
    /// must be zero; only rows in `dst` hold the result afterwards. `work` is
    /// scratch space.
    pub fn apply_inplace(
        &self,
        data: &mut [Complex64],
        src: Range<usize>,
        dst: Range<usize>,
        work: &mut Vec<Complex64>,
    ) {
        Fft2::get(self.grid.n()).convolve(data, src, dst, &self.multiplier, work);
    }

    /// Applies the operator symbol `sigma` spectrally, i.e. `-Laplacian - 4ik dbar`.
    /// Nyquist bins use the signed frequency `-pi/h`, matching the kernel, so
    /// the operator inverts the convolution exactly on every bin.
    pub fn apply_operator(&self, f: &ComplexField) -> Result<ComplexField> {
        f.grid().ensure_same(&self.grid, "Faddeev operator")?;
        let k = self.k;
        Ok(crate::spectral::apply_multiplier(f, |(x1, _), (x2, _)| {
            Complex64::new(x1 * x1 + x2 * x2, 0.0) + 2.0 * k * Complex64::new(x1, x2)
        }))
    }
}

/// Row range of the padded grid covering the base grid placed at its centre.
fn centre_rows(base: &Grid2D, padded: &Grid2D) -> (usize, Range<usize>) {
    let off = padded.origin_index() - base.origin_index();
    (off, off..off + base.n())
}

/// `g_k * h` evaluated on the grid of `h`.
pub fn faddeev_convolve(k: Complex64, h: &ComplexField) -> Result<ComplexField> {
    if k == ZERO {
        return Err(NvError::InvalidArgument("k must be nonzero".into()));
    }
    let grid = *h.grid();
    if h.max_abs() == 0.0 {
        return Ok(ComplexField::zeros(grid));
    }
    let r_source = support_radius(h, SUPPORT_TOL);
    let r_target = grid.half_width() * std::f64::consts::SQRT_2;
    let plan = KernelPlan::new(&grid, r_source, r_target)?;
    let kernel = FaddeevKernel::new(k, &plan)?;
    let padded = h.embed(plan.padded)?;
    let (_, rows) = centre_rows(&grid, &plan.padded);
    let mut data = padded.into_values();
    kernel.apply_inplace(&mut data, rows.clone(), rows, &mut Vec::new());
    ComplexField::from_values(plan.padded, data)?.crop(grid)
}

fn support_radius(f: &ComplexField, rel_tol: f64) -> f64 {
    let max = f.max_abs();
    if max == 0.0 {
        return 0.0;
    }
    let grid = f.grid();
    (0..grid.len())
        .filter(|&i| f.values()[i].norm() > rel_tol * max)
        .map(|i| grid.point_flat(i).norm())
        .fold(0.0, f64::max)
        + grid.spacing()
}

/// A complex geometrical optics solution normalized by its exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct CgoSolution {
    pub k: Complex64,
    /// `mu(z, k)` on the potential's grid.
    pub mu: ComplexField,
    pub variant: Variant,
    /// `||(-Laplacian - 4ik dbar + q) mu|| / ||q||` for the plus variant
    /// (`d` in place of `dbar` for the minus variant).
    pub residual: f64,
    pub iterations: usize,
}

/// Settings for the direct problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    pub gmres: GmresConfig,
    pub support_tol: f64,
    pub execution: Execution,
    /// Fraction of k samples allowed to fail in a grid sweep.
    pub max_failure_fraction: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            gmres: GmresConfig::default(),
            support_tol: SUPPORT_TOL,
            execution: Execution::default(),
            max_failure_fraction: 0.0,
        }
    }
}

/// Potential samples arranged for the plus-variant solve.
struct Geometry {
    q: Vec<Complex64>,
    support: Vec<usize>,
    q_support: Vec<Complex64>,
    /// Base-grid rows containing the support.
    rows: Range<usize>,
}

impl Geometry {
    fn new(q: &ComplexField, tol: f64) -> Self {
        let max = q.max_abs();
        let n = q.grid().n();
        let support: Vec<usize> = (0..q.grid().len())
            .filter(|&i| max > 0.0 && q.values()[i].norm() > tol * max)
            .collect();
        let q_support = support.iter().map(|&i| q.values()[i]).collect();
        let rows = match (support.first(), support.last()) {
            (Some(&a), Some(&b)) => a / n..b / n + 1,
            _ => 0..0,
        };
        Self {
            q: q.values().to_vec(),
            support,
            q_support,
            rows,
        }
    }
}

/// Scratch buffers reused across solves on one worker.
#[derive(Default)]
pub struct Workspace {
    buf: Vec<Complex64>,
    work: Vec<Complex64>,
}

/// Result of the Lippmann-Schwinger solve restricted to the support.
struct SupportSolution {
    v: Vec<Complex64>,
    info: GmresInfo,
}

/// A potential prepared for repeated direct solves.
pub struct ForwardProblem {
    grid: Grid2D,
    plus: Geometry,
    minus: Geometry,
    ls_plan: KernelPlan,
    options: ForwardOptions,
}

impl ForwardProblem {
    pub fn new(q: &Potential, options: ForwardOptions) -> Result<Self> {
        let grid = *q.grid();
        let r_s = q.support_radius(options.support_tol);
        if r_s > 0.5 * grid.half_width() {
            return Err(NvError::InvalidArgument(format!(
                "potential support radius {r_s:.3} exceeds half the box half-width {}",
                grid.half_width()
            )));
        }
        let plus = Geometry::new(q.field(), options.support_tol);
        let minus = Geometry::new(&q.field().reflect_conj(), options.support_tol);
        let ls_plan = KernelPlan::new(&grid, r_s, r_s)?;
        Ok(Self {
            grid,
            plus,
            minus,
            ls_plan,
            options,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn options(&self) -> &ForwardOptions {
        &self.options
    }

    fn geometry(&self, variant: Variant) -> &Geometry {
        match variant {
            Variant::Plus => &self.plus,
            Variant::Minus => &self.minus,
        }
    }

    fn support_radius(&self) -> f64 {
        self.ls_plan.cutoff.inner() - self.grid.spacing()
    }

    /// Solves `[I + g_k * (q .)] v = -g_k * q` for `v = mu - 1` on the support of q.
    fn solve_support(&self, kernel: &FaddeevKernel, geo: &Geometry, ws: &mut Workspace) -> Result<SupportSolution> {
        let k = kernel.k();
        let m = geo.support.len();
        if m == 0 {
            return Ok(SupportSolution {
                v: Vec::new(),
                info: GmresInfo {
                    iterations: 0,
                    relative_residual: 0.0,
                    converged: true,
                },
            });
        }
        let padded = *kernel.grid();
        let (off, _) = centre_rows(&self.grid, &padded);
        let np = padded.n();
        let n = self.grid.n();
        let map: Vec<usize> = geo
            .support
            .iter()
            .map(|&i| (i / n + off) * np + i % n + off)
            .collect();
        let rows = geo.rows.start + off..geo.rows.end + off;
        let Workspace { buf, work } = ws;
        let mut convolve = |src: &[Complex64], out: &mut [Complex64]| {
            buf.clear();
            buf.resize(np * np, ZERO);
            for (&p, &s) in map.iter().zip(src) {
                buf[p] = s;
            }
            kernel.apply_inplace(buf, rows.clone(), rows.clone(), work);
            for (o, &p) in out.iter_mut().zip(&map) {
                *o = buf[p];
            }
        };
        let mut b = vec![ZERO; m];
        convolve(&geo.q_support, &mut b);
        b.iter_mut().for_each(|x| *x = -*x);
        let mut x = vec![ZERO; m];
        let mut scratch = vec![ZERO; m];
        let info = gmres(
            |v: &[Complex64], out: &mut [Complex64]| {
                for ((s, &vi), &qi) in scratch.iter_mut().zip(v).zip(&geo.q_support) {
                    *s = qi * vi;
                }
                convolve(&scratch, out);
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o += vi;
                }
            },
            &b,
            &mut x,
            &self.options.gmres,
        );
        if !info.converged {
            return Err(NvError::NonConvergence {
                context: format!("Lippmann-Schwinger solve at k = {k}"),
                iterations: info.iterations,
                residual: info.relative_residual,
            });
        }
        Ok(SupportSolution { v: x, info })
    }

    /// `t(k) = int exp(i(kz + conj(kz))) q mu dz` for the geometry's potential,
    /// split as the transform of `q` plus the correction from `mu - 1`.
    fn transform_from(&self, k: Complex64, geo: &Geometry, sol: &SupportSolution) -> Complex64 {
        let n = self.grid.n();
        let phase_x: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * k.re * self.grid.coord(i)))
            .collect();
        let phase_y: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, -2.0 * k.im * self.grid.coord(j)))
            .collect();
        let e = |idx: usize| phase_x[idx % n] * phase_y[idx / n];
        let t2: Vec<Complex64> = geo
            .q
            .iter()
            .enumerate()
            .map(|(idx, &q)| if q == ZERO { ZERO } else { e(idx) * q })
            .collect();
        let t1: Vec<Complex64> = geo
            .support
            .iter()
            .zip(&geo.q_support)
            .zip(&sol.v)
            .map(|((&idx, &q), &v)| e(idx) * q * v)
            .collect();
        (pairwise_sum_complex(&t2) + pairwise_sum_complex(&t1)) * self.grid.cell_area()
    }

    /// Scattering transform at one `k`, with the solver diagnostics.
    pub fn transform_with(&self, k: Complex64, variant: Variant, ws: &mut Workspace) -> Result<(Complex64, GmresInfo)> {
        if k == ZERO {
            return Err(NvError::InvalidArgument(
                "k = 0 is not solved directly; use the D-bar value at the origin".into(),
            ));
        }
        let geo = self.geometry(variant);
        if geo.support.is_empty() {
            return Ok((ZERO, GmresInfo { iterations: 0, relative_residual: 0.0, converged: true }));
        }
        let kernel = FaddeevKernel::new(k, &self.ls_plan)?;
        self.transform_with_kernel(&kernel, variant, ws)
    }

    fn transform_with_kernel(
        &self,
        kernel: &FaddeevKernel,
        variant: Variant,
        ws: &mut Workspace,
    ) -> Result<(Complex64, GmresInfo)> {
        let geo = self.geometry(variant);
        let sol = self.solve_support(kernel, geo, ws)?;
        Ok((self.transform_from(kernel.k(), geo, &sol), sol.info))
    }

    pub fn transform(&self, k: Complex64, variant: Variant) -> Result<Complex64> {
        Ok(self.transform_with(k, variant, &mut Workspace::default())?.0)
    }

    /// Full CGO solution on the potential's grid.
    pub fn solve(&self, k: Complex64, variant: Variant) -> Result<CgoSolution> {
        if k == ZERO {
            return Err(NvError::InvalidArgument(
                "k = 0 is not solved directly; use the D-bar value at the origin".into(),
            ));
        }
        let geo = self.geometry(variant);
        let grid = self.grid;
        if geo.support.is_empty() {
            return Ok(CgoSolution {
                k,
                mu: ComplexField::constant(grid, ONE),
                variant,
                residual: 0.0,
                iterations: 0,
            });
        }
        // One kernel serves both the solve on the support and the extension
        // mu - 1 = -g_k * (q mu) to the whole box, so the two are consistent.
        let r_target = grid.half_width() * std::f64::consts::SQRT_2;
        let plan = KernelPlan::new(&grid, self.support_radius(), r_target)?;
        let kernel = FaddeevKernel::new(k, &plan)?;
        let sol = self.solve_support(&kernel, geo, &mut Workspace::default())?;
        let padded = plan.padded;
        let mut source = ComplexField::zeros(grid);
        for ((&idx, &q), &v) in geo.support.iter().zip(&geo.q_support).zip(&sol.v) {
            source.values_mut()[idx] = -q * (ONE + v);
        }
        let mut data = source.embed(padded)?.into_values();
        let (off, _) = centre_rows(&grid, &padded);
        let np = padded.n();
        kernel.apply_inplace(
            &mut data,
            geo.rows.start + off..geo.rows.end + off,
            0..np,
            &mut Vec::new(),
        );
        let v_padded = ComplexField::from_values(padded, data)?;

        // Residual of the PDE, using the periodic solution's exact spectral derivatives.
        let lv = kernel.apply_operator(&v_padded)?.crop(grid)?;
        let v = v_padded.crop(grid)?;
        let q_field = ComplexField::from_values(grid, geo.q.clone())?;
        let mu = v.map(|x| x + ONE);
        let res = lv.add(&q_field.mul(&mu)?)?;
        let residual = res.l2_norm() / q_field.l2_norm();
        let mu = match variant {
            Variant::Plus => mu,
            Variant::Minus => mu.reflect_conj(),
        };
        Ok(CgoSolution {
            k,
            mu,
            variant,
            residual,
            iterations: sol.info.iterations,
        })
    }

    /// Scattering transform at each of `ks`, in order.
    ///
    /// Samples related by quarter turns (`k, ik, -k, -ik`) share the costly
    /// part of the kernel construction, so they are processed together.
    pub fn transform_many(&self, ks: &[Complex64], variant: Variant) -> Vec<Result<(Complex64, GmresInfo)>> {
        let geo = self.geometry(variant);
        if geo.support.is_empty() {
            let mut ws = Workspace::default();
            return ks.iter().map(|&k| self.transform_with(k, variant, &mut ws)).collect();
        }
        // Group by the representative in the quadrant Re > 0, Im >= 0.
        let mut groups: Vec<(Complex64, Vec<(usize, usize)>)> = Vec::new();
        let mut slot: HashMap<(u64, u64), usize> = HashMap::new();
        for (i, &k) in ks.iter().enumerate() {
            if k == ZERO {
                groups.push((k, vec![(i, 0)]));
                continue;
            }
            let turns = (0..4)
                .find(|&t| {
                    let w = quarter_turn(k, t);
                    w.re > 0.0 && w.im >= 0.0
                })
                .unwrap_or(0);
            let rep = quarter_turn(k, turns);
            let back = (4 - turns) % 4;
            let key = (rep.re.to_bits(), rep.im.to_bits());
            match slot.get(&key) {
                Some(&g) => groups[g].1.push((i, back)),
                None => {
                    slot.insert(key, groups.len());
                    groups.push((rep, vec![(i, back)]));
                }
            }
        }
        let per_group = par::map_with(groups.len(), self.options.execution, Workspace::default, |ws, g| {
            let (rep, members) = &groups[g];
            if *rep == ZERO {
                return vec![self.transform_with(*rep, variant, ws)];
            }
            let density = annulus_density(*rep, &self.ls_plan);
            members
                .iter()
                .map(|&(_, turns)| {
                    let kernel = FaddeevKernel::from_density(*rep, turns, &self.ls_plan, &density);
                    self.transform_with_kernel(&kernel, variant, ws)
                })
                .collect::<Vec<_>>()
        });
        let mut out: Vec<Option<Result<(Complex64, GmresInfo)>>> = (0..ks.len()).map(|_| None).collect();
        for ((_, members), results) in groups.iter().zip(per_group) {
            for (&(i, _), r) in members.iter().zip(results) {
                out[i] = Some(r);
            }
        }
        out.into_iter().map(|r| r.expect("every sample is assigned to a group")).collect()
    }
}

/// Convenience wrapper around [`ForwardProblem::solve`].
pub fn solve_cgo(q: &Potential, k: Complex64, variant: Variant) -> Result<CgoSolution> {
    ForwardProblem::new(q, ForwardOptions::default())?.solve(k, variant)
}

/// Scattering transform of `q` at `k` evaluated with a given CGO solution.
pub fn scattering_transform(q: &Potential, sol: &CgoSolution) -> Result<Complex64> {
    q.grid().ensure_same(sol.mu.grid(), "potential and CGO solution")?;
    let grid = q.grid();
    let k = sol.k;
    let items: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let z = grid.point_flat(idx);
            let arg = match sol.variant {
                Variant::Plus => k * z,
                Variant::Minus => k * z.conj(),
            };
            let qv = q.field().values()[idx];
            if qv == ZERO {
                return ZERO;
            }
            // T2 uses the constant 1 and T1 the correction mu - 1.
            let e = Complex64::from_polar(1.0, 2.0 * arg.re);
            e * qv + e * qv * (sol.mu.values()[idx] - ONE)
        })
        .collect();
    Ok(pairwise_sum_complex(&items) * grid.cell_area())
}

/// Per-k diagnostics of a scattering sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDiagnostics {
    pub ks: Vec<Complex64>,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
    /// k values at which the solve failed, with the reason.
    pub failures: Vec<(Complex64, String)>,
    /// `max |t(k)| / |k|^2` over the samples with `|k| <= 0.5`.
    pub origin_bound: f64,
}

/// Scattering data sampled on the disc `|k| <= k_max` of `kgrid`.
pub fn scattering_grid(
    q: &Potential,
    kgrid: &Grid2D,
    k_max: f64,
    variant: Variant,
    options: ForwardOptions,
) -> Result<(ScatteringData, SweepDiagnostics)> {
    scattering_annulus(q, kgrid, 0.0, k_max, variant, options)
}

/// Scattering data sampled on the annulus `k_min <= |k| <= k_max` of
/// `kgrid`; samples inside `k_min` are left at zero.
pub fn scattering_annulus(
    q: &Potential,
    kgrid: &Grid2D,
    k_min: f64,
    k_max: f64,
    variant: Variant,
    options: ForwardOptions,
) -> Result<(ScatteringData, SweepDiagnostics)> {
    if kgrid.plane() != Plane::K {
        return Err(NvError::InvalidArgument("scattering data needs a k-plane grid".into()));
    }
    let problem = ForwardProblem::new(q, options)?;
    let origin = kgrid.origin_flat();
    let indices: Vec<usize> = (0..kgrid.len())
        .filter(|&i| {
            let r = kgrid.point_flat(i).norm();
            i != origin && r >= k_min && r <= k_max
        })
        .collect();
    let ks: Vec<Complex64> = indices.iter().map(|&i| kgrid.point_flat(i)).collect();
    let results = problem.transform_many(&ks, variant);
    let mut field = ComplexField::zeros(*kgrid);
    let mut diag = SweepDiagnostics {
        ks: ks.clone(),
        iterations: Vec::with_capacity(ks.len()),
        residuals: Vec::with_capacity(ks.len()),
        failures: Vec::new(),
        origin_bound: 0.0,
    };
    for ((&idx, &k), res) in indices.iter().zip(&ks).zip(results) {
        match res {
            Ok((t, info)) => {
                field.values_mut()[idx] = t;
                diag.iterations.push(info.iterations);
                diag.residuals.push(info.relative_residual);
                if k.norm() <= 0.5 {
                    diag.origin_bound = diag.origin_bound.max(t.norm() / k.norm_sqr());
                }
            }
            Err(e) => {
                diag.iterations.push(0);
                diag.residuals.push(f64::NAN);
                diag.failures.push((k, e.to_string()));
            }
        }
    }
    let allowed = (options.max_failure_fraction * ks.len() as f64).floor() as usize;
    if diag.failures.len() > allowed {
        let (k, why) = &diag.failures[0];
        return Err(NvError::NonConvergence {
            context: format!(
                "{} of {} k samples failed (first at k = {k}: {why})",
                diag.failures.len(),
                ks.len()
            ),
            iterations: 0,
            residual: f64::NAN,
        });
    }
    Ok((ScatteringData::new(field, variant, k_max)?, diag))
}
