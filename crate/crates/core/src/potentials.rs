//! Conductivity-type potentials and the Gaussian-cutoff approximation family.

use std::f64::consts::E;

use num_complex::Complex64;

use crate::data::Potential;
use crate::error::{NvError, Result};
use crate::gmres::{gmres, GmresConfig};
use crate::grid::{ComplexField, Grid2D, Plane};
use crate::spectral::{apply_multiplier, lp_norm, spectral_derivative, DiffOp};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Smallest admissible `1 + c` for a bump amplitude `c`.
pub const POSITIVITY_MARGIN: f64 = 1e-3;

/// Radial bump conductivity
/// `gamma = 1 + c e exp(-1/(1 - (|z|/R)^2))` for `|z| < R`, and 1 outside.
pub fn radial_bump_gamma(grid: &Grid2D, c: f64, radius: f64) -> Result<ComplexField> {
    if grid.plane() != Plane::Z {
        return Err(NvError::InvalidArgument("conductivities live on a z-plane grid".into()));
    }
    if !(radius > 0.0 && radius < grid.half_width() - 2.0 * grid.spacing()) {
        return Err(NvError::InvalidArgument(format!(
            "bump radius {radius} must lie in (0, s - 2h) = (0, {})",
            grid.half_width() - 2.0 * grid.spacing()
        )));
    }
    if !(c.is_finite() && 1.0 + c >= POSITIVITY_MARGIN) {
        return Err(NvError::InvalidArgument(format!(
            "bump amplitude {c} leaves min gamma below {POSITIVITY_MARGIN}"
        )));
    }
    Ok(ComplexField::from_real_fn(*grid, |z| {
        let x = z.norm_sqr() / (radius * radius);
        if x < 1.0 {
            1.0 + c * E * (-1.0 / (1.0 - x)).exp()
        } else {
            1.0
        }
    }))
}

/// Potential of the radial bump conductivity from the closed-form radial
/// Laplacian of `gamma^(1/2)`, with the conductivity attached.
///
/// The bump's spectrum decays slowly, so a spectral Laplacian on a coarse
/// grid rings over the whole box; the closed form keeps `q` exactly zero for
/// `|z| >= R` and exactly equal on samples of equal radius.
pub fn radial_bump_potential(grid: &Grid2D, c: f64, radius: f64) -> Result<Potential> {
    let gamma = radial_bump_gamma(grid, c, radius)?;
    let r2max = radius * radius;
    let q = ComplexField::from_real_fn(*grid, |z| {
        let x = z.norm_sqr() / r2max;
        if x >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - x;
        let f = c * E * (-1.0 / s).exp();
        if f == 0.0 {
            return 0.0;
        }
        // f' = f a, f'' = f (a^2 + a'), f'/r = f b with
        // a = -2r/(R^2 s^2), b = -2/(R^2 s^2), a' = b - 8 r^2/(R^4 s^3).
        let b = -2.0 / (r2max * s * s);
        let a2 = 4.0 * x / (r2max * s.powi(4));
        let da = b - 8.0 * x / (r2max * s.powi(3));
        let u2 = 1.0 + f;
        let f1sq = f * f * a2;
        let f2 = f * (a2 + da);
        f2 / (2.0 * u2) - f1sq / (4.0 * u2 * u2) + f * b / (2.0 * u2)
    });
    Potential::with_gamma(q, gamma)
}

/// `q = Laplacian(gamma^(1/2)) / gamma^(1/2)`, computed spectrally.
pub fn gamma_to_potential(gamma: &ComplexField) -> Result<Potential> {
    let min_re = gamma.values().iter().fold(f64::INFINITY, |m, v| m.min(v.re));
    if min_re <= 0.0 {
        return Err(NvError::InvalidArgument(format!(
            "conductivity must be positive, min Re = {min_re}"
        )));
    }
    let root = gamma.map(|g| Complex64::new(g.re.sqrt(), 0.0));
    let lap = spectral_derivative(&root, DiffOp::Laplacian);
    let q = lap.zip_map(&root, |a, b| Complex64::new(a.re / b.re, 0.0))?;
    Potential::with_gamma(q, gamma.clone())
}

/// Recovers `u = gamma^(1/2)` from `q` by solving `Laplacian u = q u` with
/// `u -> 1` on the boundary ring. Inverse of [`gamma_to_potential`] for
/// compactly supported conductivities.
pub fn sqrt_gamma_from_potential(q: &Potential, cfg: &GmresConfig) -> Result<ComplexField> {
    let grid = *q.grid();
    let qv = q.field().values();
    // w = u - 1 solves w - P L^{-1}(q w) = P L^{-1} q, where L^{-1} is the
    // periodic inverse Laplacian and P removes the boundary-ring mean.
    let boundary: Vec<usize> = (0..grid.len()).filter(|&i| grid.on_boundary(i)).collect();
    let inv_lap = |f: &[Complex64]| -> Vec<Complex64> {
        let field = ComplexField::from_values(grid, f.to_vec()).expect("grid length");
        let mut out = apply_multiplier(&field, |(x1, _), (x2, _)| {
            let s = x1 * x1 + x2 * x2;
            if s == 0.0 {
                ZERO
            } else {
                Complex64::new(-1.0 / s, 0.0)
            }
        })
        .into_values();
        let mean = boundary.iter().map(|&i| out[i]).sum::<Complex64>() / boundary.len() as f64;
        out.iter_mut().for_each(|v| *v -= mean);
        out
    };
    let b = inv_lap(qv);
    let mut w = vec![ZERO; grid.len()];
    let info = gmres(
        |v: &[Complex64], out: &mut [Complex64]| {
            let qw: Vec<Complex64> = v.iter().zip(qv).map(|(a, b)| a * b).collect();
            let l = inv_lap(&qw);
            for ((o, &vi), li) in out.iter_mut().zip(v).zip(l) {
                *o = vi - li;
            }
        },
        &b,
        &mut w,
        cfg,
    );
    if !info.converged {
        return Err(NvError::NonConvergence {
            context: "recovering the conductivity from q".into(),
            iterations: info.iterations,
            residual: info.relative_residual,
        });
    }
    ComplexField::from_values(grid, w.into_iter().map(|v| v + 1.0).collect())
}

/// Field and derivatives of `phi_eps(z) = exp(-eps^2 |z|^2)`.
struct GaussianCutoff {
    eps2: f64,
}

impl GaussianCutoff {
    fn value(&self, z: Complex64) -> f64 {
        (-self.eps2 * z.norm_sqr()).exp()
    }

    /// `(d/dx, d/dy) phi = -2 eps^2 (x, y) phi`.
    fn gradient(&self, z: Complex64) -> (f64, f64) {
        let p = self.value(z);
        (-2.0 * self.eps2 * z.re * p, -2.0 * self.eps2 * z.im * p)
    }

    /// `Laplacian phi = 4 eps^2 (eps^2 |z|^2 - 1) phi`.
    fn laplacian(&self, z: Complex64) -> f64 {
        4.0 * self.eps2 * (self.eps2 * z.norm_sqr() - 1.0) * self.value(z)
    }
}

/// `mu_eps = 1 + phi_eps (mu - 1)` and `q_eps = Laplacian(mu_eps) / mu_eps`,
/// expanding the Laplacian with the analytic derivatives of `phi_eps`.
pub fn gaussian_cutoff(mu: &ComplexField, eps: f64) -> Result<(ComplexField, ComplexField)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(NvError::InvalidArgument(format!("cutoff parameter must be positive, got {eps}")));
    }
    let min_abs = mu.values().iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
    if !(min_abs > 0.0) {
        return Err(NvError::InvalidArgument("mu vanishes somewhere on the grid".into()));
    }
    let grid = *mu.grid();
    let phi = GaussianCutoff { eps2: eps * eps };
    let mu_x = spectral_derivative(mu, DiffOp::Dx);
    let mu_y = spectral_derivative(mu, DiffOp::Dy);
    let mu_lap = spectral_derivative(mu, DiffOp::Laplacian);
    let mut mu_eps = Vec::with_capacity(grid.len());
    let mut q_eps = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let z = grid.point_flat(idx);
        let m = mu.values()[idx];
        let p = phi.value(z);
        let (px, py) = phi.gradient(z);
        let me = 1.0 + p * (m - 1.0);
        let lap = (m - 1.0) * phi.laplacian(z)
            + 2.0 * (px * mu_x.values()[idx] + py * mu_y.values()[idx])
            + p * mu_lap.values()[idx];
        mu_eps.push(me);
        q_eps.push(lap / me);
    }
    Ok((
        ComplexField::from_values(grid, mu_eps)?,
        ComplexField::from_values(grid, q_eps)?,
    ))
}

/// `||q_eps - q||_p` for each cutoff parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub p: f64,
    /// `(eps, ||q_eps - q||_p)` in the order given.
    pub rows: Vec<(f64, f64)>,
}

impl ConvergenceTable {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 < w[0].1)
    }

    /// First entry divided by the last (infinite when the last is 0 and the first is not).
    pub fn reduction(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if b.1 > 0.0 => a.1 / b.1,
            (Some(a), Some(_)) if a.1 > 0.0 => f64::INFINITY,
            _ => 1.0,
        }
    }
}

/// Largest relative residual of `q = Laplacian(mu)/mu` accepted by the study.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Convergence of the Gaussian-cutoff potentials to `q` in `L^p`, `1 < p < 2`.
pub fn lp_convergence_study(
    mu: &ComplexField,
    q: &ComplexField,
    p: f64,
    epsilons: &[f64],
) -> Result<ConvergenceTable> {
    if !(p > 1.0 && p < 2.0) {
        return Err(NvError::InvalidArgument(format!("exponent must lie in (1, 2), got {p}")));
    }
    mu.grid().ensure_same(q.grid(), "mu and q")?;
    let lap = spectral_derivative(mu, DiffOp::Laplacian);
    let residual = lap.sub(&q.mul(mu)?)?.l2_norm();
    let scale = lap.l2_norm().max(q.l2_norm());
    if scale > 0.0 && residual > CONSISTENCY_TOL * scale {
        return Err(NvError::InvalidArgument(format!(
            "q is not Laplacian(mu)/mu (relative residual {:e})",
            residual / scale
        )));
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let (_, q_eps) = gaussian_cutoff(mu, eps)?;
        rows.push((eps, lp_norm(&q_eps.sub(q)?, p)?));
    }
    Ok(ConvergenceTable { p, rows })
}

/// `|| |z|^power exp(-eps^2 |z|^2) ||_p` on a grid, the two sides of the
/// cutoff scaling identity `|| |z|^s phi_eps ||_p = eps^(-s-2/p) || |w|^s phi ||_p`.
pub fn weighted_cutoff_norm(grid: &Grid2D, power: f64, p: f64, eps: f64) -> Result<f64> {
    let f = ComplexField::from_real_fn(*grid, |z| {
        let r2 = z.norm_sqr();
        r2.powf(0.5 * power) * (-eps * eps * r2).exp()
    });
    lp_norm(&f, p)
}
