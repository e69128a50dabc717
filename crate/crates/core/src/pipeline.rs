//! Compositions of the direct and inverse transforms shared by the command
//! line and the test suites.

use crate::data::{Potential, ScatteringData};
use crate::dbar::{DbarOptions, DbarProblem, DbarSweep};
use crate::error::{NvError, Result};
use crate::faddeev::{scattering_annulus, ForwardOptions, SweepDiagnostics};
use crate::grid::{ComplexField, Grid2D};

/// Both reconstructions of the potential from one D-bar sweep.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub sweep: DbarSweep,
    /// `q` from the scattering-data formula of the data's variant.
    pub q_formula: Potential,
    /// `Laplacian(mu0) / mu0`, or the reason it was rejected.
    pub q_conductivity: std::result::Result<Potential, String>,
}

impl Reconstruction {
    pub fn min_mu0(&self) -> f64 {
        self.sweep.mu0.values().iter().fold(f64::INFINITY, |m, v| m.min(v.norm()))
    }
}

/// Runs the D-bar sweep of `t` over `zgrid` and forms both potentials.
pub fn reconstruct(t: &ScatteringData, zgrid: &Grid2D, options: DbarOptions) -> Result<Reconstruction> {
    let sweep = DbarProblem::new(t, options).sweep(zgrid)?;
    let q_formula = Potential::new(sweep.q_formula()?)?;
    let q_conductivity = sweep
        .q_conductivity()
        .and_then(Potential::new)
        .map_err(|e| e.to_string());
    Ok(Reconstruction {
        sweep,
        q_formula,
        q_conductivity,
    })
}

/// `||a - b|| / ||b||` over the samples with `k_min <= |k| <= k_max`.
pub fn annulus_relative_error(a: &ComplexField, b: &ComplexField, k_min: f64, k_max: f64) -> Result<f64> {
    a.grid().ensure_same(b.grid(), "fields compared on an annulus")?;
    let grid = a.grid();
    let (mut num, mut den) = (0.0, 0.0);
    for idx in 0..grid.len() {
        let r = grid.point_flat(idx).norm();
        if r >= k_min && r <= k_max {
            num += (a.values()[idx] - b.values()[idx]).norm_sqr();
            den += b.values()[idx].norm_sqr();
        }
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// Settings of a scattering round trip `t -> q -> T(q)`.
#[derive(Debug, Clone, Copy)]
pub struct RoundTripOptions {
    pub dbar: DbarOptions,
    pub forward: ForwardOptions,
    /// The reconstructed potential is multiplied by a smooth radial window,
    /// 1 inside `window.0` and 0 beyond `window.1`, so that the direct solver
    /// sees a compactly supported potential. The direct solver accepts
    /// supports up to `s/2`, and a support is measured with one cell of
    /// margin, so `window.1` may not exceed `s/2 - h`.
    pub window: (f64, f64),
    /// Annulus on which the data are recomputed and compared.
    pub k_min: f64,
    pub k_max: f64,
}

/// Outcome of a round trip.
#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub reconstruction: Reconstruction,
    /// The windowed potential fed back into the direct problem.
    pub q: Potential,
    pub t_back: ScatteringData,
    pub diagnostics: SweepDiagnostics,
    /// `||T(Q t) - t|| / ||t||` on the annulus.
    pub error: f64,
}

/// Reconstructs `q` from `t`, windows it, recomputes its scattering data on
/// the comparison annulus and reports the relative discrepancy there.
pub fn scattering_roundtrip(t: &ScatteringData, zgrid: &Grid2D, options: RoundTripOptions) -> Result<RoundTrip> {
    validate_roundtrip(t, zgrid, &options)?;
    let reconstruction = reconstruct(t, zgrid, options.dbar)?;
    complete_roundtrip(t, reconstruction, options)
}

/// The round trip of `t` from an already computed reconstruction of it, so
/// that callers holding one do not repeat the D-bar sweep.
pub fn complete_roundtrip(t: &ScatteringData, reconstruction: Reconstruction, options: RoundTripOptions) -> Result<RoundTrip> {
    validate_roundtrip(t, reconstruction.q_formula.grid(), &options)?;
    let q = reconstruction.q_formula.windowed(options.window.0, options.window.1)?;
    let (t_back, diagnostics) = scattering_annulus(
        &q,
        t.grid(),
        options.k_min,
        options.k_max,
        t.variant(),
        options.forward,
    )?;
    let error = annulus_relative_error(t_back.field(), t.field(), options.k_min, options.k_max)?;
    Ok(RoundTrip {
        reconstruction,
        q,
        t_back,
        diagnostics,
        error,
    })
}

fn validate_roundtrip(t: &ScatteringData, zgrid: &Grid2D, options: &RoundTripOptions) -> Result<()> {
    if !(options.k_min >= 0.0 && options.k_min < options.k_max && options.k_max <= t.k_max()) {
        return Err(NvError::InvalidArgument(format!(
            "comparison annulus [{}, {}] must lie within the data disc of radius {}",
            options.k_min,
            options.k_max,
            t.k_max()
        )));
    }
    let reach = zgrid.half_width() / 2.0 - zgrid.spacing();
    if !(options.window.0 > 0.0 && options.window.0 < options.window.1 && options.window.1 <= reach) {
        return Err(NvError::InvalidArgument(format!(
            "window ({}, {}) must be increasing and end by s/2 - h = {reach}",
            options.window.0, options.window.1
        )));
    }
    Ok(())
}
