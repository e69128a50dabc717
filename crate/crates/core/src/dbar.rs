//! D-bar inversion: from scattering data `t(k)` back to `mu(z, k)`, `mu(z, 0)`
//! and the potential.
//!
//! For a fixed `z` the D-bar equation `dbar_k mu = a_z conj(mu)` with
//! `a_z(k) = t(k) / (4 pi conj k) e_{-z}(k)` is written as
//! `mu = 1 + C(a_z conj(mu))`, where `C` is the solid Cauchy transform.
//! The exponential is `e_{-z}(k) = exp(-i(kz + conj(kz)))` for the plus
//! variant and `exp(-i(k conj z + conj(k) z))` for the minus variant.
//!
//! The unknown only enters through `a_z conj(mu)`, and `a_z` vanishes outside
//! the truncation disc, so the solve runs on the disc samples and `mu` on the
//! whole k-grid is recovered by one more transform. Conjugation makes the
//! operator real-linear, so the Krylov solve runs on interleaved real and
//! imaginary parts.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::data::{Potential, ScatteringData, Variant};
use crate::error::{NvError, Result};
use crate::gmres::{gmres, GmresConfig, GmresInfo};
use crate::grid::{pairwise_sum_complex, ComplexField, Grid2D, Plane};
use crate::par::{self, Execution};
use crate::spectral::{spectral_derivative, CauchyKernel, CauchyOperator, CauchyScratch, DiffOp};

/// Smallest `|mu(z, 0)|` accepted by the conductivity reconstruction.
pub const MIN_MU_AT_ZERO: f64 = 1e-3;

/// Settings of the D-bar solves. The default kernel is the truncated
/// spectral one: on the reference pipeline it makes the formula and
/// conductivity reconstructions agree to about 1e-3, against 4e-2 with the
/// midpoint kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbarOptions {
    pub gmres: GmresConfig,
    pub kernel: CauchyKernel,
    pub execution: Execution,
}

impl Default for DbarOptions {
    fn default() -> Self {
        Self {
            gmres: GmresConfig::default(),
            kernel: CauchyKernel::TruncatedSpectral,
            execution: Execution::default(),
        }
    }
}

/// `mu(z, .)` on the k-grid for one `z`.
#[derive(Debug, Clone)]
pub struct DbarSolution {
    pub z: Complex64,
    pub mu: ComplexField,
    pub variant: Variant,
    /// Relative residual of the discrete integral equation on the disc.
    pub residual: f64,
    pub iterations: usize,
}

/// Scratch buffers of one worker.
struct Workspace {
    phi: Vec<Complex64>,
    out: Vec<Complex64>,
    work: CauchyScratch,
    a: Vec<Complex64>,
    /// `mu` on the support, interleaved real and imaginary parts.
    mu: Vec<f64>,
}

/// Per-`z` outputs of a solve.
#[derive(Debug, Clone, Copy)]
struct PointResult {
    integral: Complex64,
    mu0: Complex64,
    info: GmresInfo,
}

/// Scattering data prepared for repeated D-bar solves.
pub struct DbarProblem {
    variant: Variant,
    grid: Grid2D,
    op: Arc<CauchyOperator>,
    /// Flat indices of the samples where `t` is nonzero.
    support: Vec<usize>,
    /// `t / (4 pi conj k)` at the support samples.
    coef: Vec<Complex64>,
    /// `k` at the support samples.
    ks: Vec<Complex64>,
    options: DbarOptions,
}

impl DbarProblem {
    pub fn new(t: &ScatteringData, options: DbarOptions) -> Self {
        let grid = *t.grid();
        let support: Vec<usize> = (0..grid.len())
            .filter(|&i| t.field().values()[i] != Complex64::new(0.0, 0.0))
            .collect();
        let ks: Vec<Complex64> = support.iter().map(|&i| grid.point_flat(i)).collect();
        let coef = support
            .iter()
            .zip(&ks)
            .map(|(&i, &k)| t.field().values()[i] / (4.0 * PI * k.conj()))
            .collect();
        Self {
            variant: t.variant(),
            grid,
            op: CauchyOperator::get(&grid, options.kernel),
            support,
            coef,
            ks,
            options,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    fn workspace(&self) -> Workspace {
        let zero = Complex64::new(0.0, 0.0);
        Workspace {
            phi: vec![zero; self.grid.len()],
            out: vec![zero; self.grid.len()],
            work: CauchyScratch::default(),
            a: vec![zero; self.support.len()],
            mu: Vec::new(),
        }
    }

    /// Fills `ws.a` with `a_z` on the support, using separable phases.
    fn fill_coefficient(&self, z: Complex64, ws: &mut Workspace) {
        let w = match self.variant {
            Variant::Plus => z,
            Variant::Minus => z.conj(),
        };
        // Re(k w) = k1 w1 - k2 w2, so e_{-z} = exp(-2i k1 w1) exp(2i k2 w2).
        let n = self.grid.n();
        let axis: Vec<f64> = (0..n).map(|i| self.grid.coord(i)).collect();
        let ex: Vec<Complex64> = axis.iter().map(|&k1| Complex64::from_polar(1.0, -2.0 * k1 * w.re)).collect();
        let ey: Vec<Complex64> = axis.iter().map(|&k2| Complex64::from_polar(1.0, 2.0 * k2 * w.im)).collect();
        for ((a, &idx), &c) in ws.a.iter_mut().zip(&self.support).zip(&self.coef) {
            *a = c * ex[idx % n] * ey[idx / n];
        }
    }

    /// `out <- C(phi)` where `phi` holds `weight_j` at the support samples.
    fn cauchy_of(&self, ws: &mut Workspace, weight: impl Fn(usize) -> Complex64) {
        ws.phi.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (j, &idx) in self.support.iter().enumerate() {
            ws.phi[idx] = weight(j);
        }
        self.op.apply_into(&ws.phi, &mut ws.out, &mut ws.work);
    }

    /// Solves `mu - C(a_z conj(mu)) = 1` on the support; the result is left
    /// in `ws.mu`.
    fn solve_support(&self, z: Complex64, ws: &mut Workspace) -> Result<GmresInfo> {
        self.fill_coefficient(z, ws);
        let m = self.support.len();
        if m == 0 {
            return Ok(GmresInfo {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            });
        }
        let a = std::mem::take(&mut ws.a);
        let b: Vec<f64> = (0..2 * m).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        // mu = 1 is the initial guess.
        let mut x = b.clone();
        let info = gmres(
            |y: &[f64], out: &mut [f64]| {
                self.cauchy_of(ws, |j| a[j] * Complex64::new(y[2 * j], -y[2 * j + 1]));
                for (j, &idx) in self.support.iter().enumerate() {
                    out[2 * j] = y[2 * j] - ws.out[idx].re;
                    out[2 * j + 1] = y[2 * j + 1] - ws.out[idx].im;
                }
            },
            &b,
            &mut x,
            &self.options.gmres,
        );
        ws.mu = x;
        ws.a = a;
        if !info.converged {
            return Err(NvError::NonConvergence {
                context: format!("D-bar solve at z = {z}"),
                iterations: info.iterations,
                residual: info.relative_residual,
            });
        }
        Ok(info)
    }

    /// `a_z conj(mu)` on the support, the density whose Cauchy transform is
    /// `mu - 1`.
    fn density(&self, ws: &Workspace) -> Vec<Complex64> {
        ws.a
            .iter()
            .enumerate()
            .map(|(j, &a)| a * Complex64::new(ws.mu[2 * j], -ws.mu[2 * j + 1]))
            .collect()
    }

    fn point(&self, z: Complex64, ws: &mut Workspace) -> Result<PointResult> {
        let info = self.solve_support(z, ws)?;
        let h2 = self.grid.cell_area();
        let density = self.density(ws);
        // int t / conj(k) e_{-z} conj(mu) dk = 4 pi int a_z conj(mu) dk.
        let integral = 4.0 * PI * h2 * pairwise_sum_complex(&density);
        // mu(z, 0) = 1 + (C density)(0) = 1 - (1/pi) int density / k dk.
        let over_k: Vec<Complex64> = density.iter().zip(&self.ks).map(|(&d, &k)| d / k).collect();
        let mu0 = 1.0 - h2 / PI * pairwise_sum_complex(&over_k);
        Ok(PointResult { integral, mu0, info })
    }

    /// Full solution `mu(z, .)` on the k-grid.
    pub fn solve(&self, z: Complex64) -> Result<DbarSolution> {
        let mut ws = self.workspace();
        let info = self.solve_support(z, &mut ws)?;
        let density = self.density(&ws);
        self.cauchy_of(&mut ws, |j| density[j]);
        let mu = ws.out.iter().map(|&v| 1.0 + v).collect();
        Ok(DbarSolution {
            z,
            mu: ComplexField::from_values(self.grid, mu)?,
            variant: self.variant,
            residual: info.relative_residual,
            iterations: info.iterations,
        })
    }

    /// Solves at every point of a z-grid, one row of points per work item.
    pub fn sweep(&self, zgrid: &Grid2D) -> Result<DbarSweep> {
        if zgrid.plane() != Plane::Z {
            return Err(NvError::InvalidArgument("the D-bar sweep needs a z-plane grid".into()));
        }
        let n = zgrid.n();
        let rows = par::map(n, self.options.execution, |j| {
            let mut ws = self.workspace();
            (0..n)
                .map(|i| self.point(zgrid.point(i, j), &mut ws))
                .collect::<Result<Vec<_>>>()
        });
        let mut integral = Vec::with_capacity(zgrid.len());
        let mut mu0 = Vec::with_capacity(zgrid.len());
        let mut iterations = Vec::with_capacity(zgrid.len());
        let mut residuals = Vec::with_capacity(zgrid.len());
        for row in rows {
            for p in row? {
                integral.push(p.integral);
                mu0.push(p.mu0);
                iterations.push(p.info.iterations);
                residuals.push(p.info.relative_residual);
            }
        }
        Ok(DbarSweep {
            variant: self.variant,
            integral: ComplexField::from_values(*zgrid, integral)?,
            mu0: ComplexField::from_values(*zgrid, mu0)?,
            iterations,
            residuals,
        })
    }
}

/// Per-`z` quantities of a D-bar sweep over a z-grid.
#[derive(Debug, Clone)]
pub struct DbarSweep {
    pub variant: Variant,
    /// `int t(k) / conj(k) e_{-z}(k) conj(mu(z, k)) dk`.
    pub integral: ComplexField,
    /// `mu(z, 0)`.
    pub mu0: ComplexField,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

impl DbarSweep {
    /// Potential from the scattering-data formula:
    /// `(i / pi^2) dbar_z` of the integral for the plus variant and
    /// `(i / pi^2) d_z` for the minus variant.
    ///
    /// The integral decays only like `1/z` (or `1/conj z`), which a periodic
    /// spectral derivative would turn into boundary ringing. The tail
    /// `c (1 - exp(-|z|^2/sigma^2)) / (pi z)` is fitted on an outer annulus,
    /// removed before differentiating, and its exact derivative
    /// `c exp(-|z|^2/sigma^2) / (pi sigma^2)` added back.
    pub fn q_formula(&self) -> Result<ComplexField> {
        let grid = *self.integral.grid();
        let s = grid.half_width();
        let sigma = s / 4.0;
        let (op, pole): (DiffOp, fn(Complex64) -> Complex64) = match self.variant {
            Variant::Plus => (DiffOp::Dzbar, |z| z),
            Variant::Minus => (DiffOp::Dz, |z| z.conj()),
        };
        let ring: Vec<Complex64> = (0..grid.len())
            .filter(|&i| {
                let r = grid.point_flat(i).norm();
                r >= 0.75 * s && r <= 0.95 * s
            })
            .map(|i| pole(grid.point_flat(i)) * self.integral.values()[i])
            .collect();
        let c = if ring.is_empty() {
            Complex64::new(0.0, 0.0)
        } else {
            PI * pairwise_sum_complex(&ring) / ring.len() as f64
        };
        let tail = |z: Complex64| {
            let r2 = z.norm_sqr();
            if r2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                c * (-(-r2 / (sigma * sigma)).exp_m1()) / (PI * pole(z))
            }
        };
        let remainder = ComplexField::from_values(
            grid,
            (0..grid.len())
                .map(|i| self.integral.values()[i] - tail(grid.point_flat(i)))
                .collect(),
        )?;
        let d = spectral_derivative(&remainder, op);
        let factor = Complex64::new(0.0, 1.0 / (PI * PI));
        let values = (0..grid.len())
            .map(|i| {
                let r2 = grid.point_flat(i).norm_sqr();
                let tail_d = c * (-r2 / (sigma * sigma)).exp() / (PI * sigma * sigma);
                factor * (d.values()[i] + tail_d)
            })
            .collect();
        ComplexField::from_values(grid, values)
    }

    /// Potential `Laplacian(mu(., 0)) / mu(., 0)`.
    pub fn q_conductivity(&self) -> Result<ComplexField> {
        q_from_mu_at_zero(&self.mu0)
    }
}

/// `Laplacian(mu0) / mu0`, rejecting fields that come close to zero.
pub fn q_from_mu_at_zero(mu0: &ComplexField) -> Result<ComplexField> {
    let min = mu0.values().iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
    if min < MIN_MU_AT_ZERO {
        return Err(NvError::InvalidArgument(format!(
            "min |mu(z, 0)| = {min:e} is below {MIN_MU_AT_ZERO:e}; the data is no longer of conductivity type"
        )));
    }
    let lap = spectral_derivative(mu0, DiffOp::Laplacian);
    lap.zip_map(mu0, |l, m| l / m)
}

/// Solves the D-bar equation of `t`'s variant at one `z`.
pub fn solve_dbar(t: &ScatteringData, z: Complex64, options: DbarOptions) -> Result<DbarSolution> {
    DbarProblem::new(t, options).solve(z)
}

/// `mu(z, 0) = 1 - (1 / 4 pi^2) int t(k) / |k|^2 e_{-z}(k) conj(mu(z, k)) dk`
/// by midpoint quadrature; the origin sample is excluded.
pub fn mu_at_zero(t: &ScatteringData, mu: &DbarSolution) -> Result<Complex64> {
    t.grid().ensure_same(mu.mu.grid(), "scattering data and D-bar solution")?;
    let grid = t.grid();
    let w = match mu.variant {
        Variant::Plus => mu.z,
        Variant::Minus => mu.z.conj(),
    };
    let origin = grid.origin_flat();
    let terms: Vec<Complex64> = (0..grid.len())
        .filter(|&i| i != origin)
        .map(|i| {
            let k = grid.point_flat(i);
            let e = Complex64::from_polar(1.0, -2.0 * (k * w).re);
            t.field().values()[i] / k.norm_sqr() * e * mu.mu.values()[i].conj()
        })
        .collect();
    Ok(1.0 - grid.cell_area() / (4.0 * PI * PI) * pairwise_sum_complex(&terms))
}

/// Runs the D-bar sweep of `t` over `zgrid`.
pub fn dbar_sweep(t: &ScatteringData, zgrid: &Grid2D, options: DbarOptions) -> Result<DbarSweep> {
    DbarProblem::new(t, options).sweep(zgrid)
}

/// Potential from the scattering-data formula of `t`'s variant.
pub fn reconstruct_q_formula(t: &ScatteringData, zgrid: &Grid2D, options: DbarOptions) -> Result<Potential> {
    Potential::new(dbar_sweep(t, zgrid, options)?.q_formula()?)
}

/// Potential `Laplacian(mu(., 0)) / mu(., 0)`.
pub fn reconstruct_q_conductivity(
    t: &ScatteringData,
    zgrid: &Grid2D,
    options: DbarOptions,
) -> Result<Potential> {
    Potential::new(dbar_sweep(t, zgrid, options)?.q_conductivity()?)
}
