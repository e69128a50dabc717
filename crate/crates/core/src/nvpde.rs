//! The Novikov-Veselov equation
//! `q_tau = -d^3 q - dbar^3 q + (3/4) d(q v) + (3/4) dbar(q conj(v))` with
//! `v = dbar^{-1} d q`: its right-hand side, a pseudo-spectral time stepper
//! and the residual of the inverse-scattering evolution against it.
//!
//! All derivatives are spectral on the z-grid. The linear part has the
//! purely imaginary symbol `i Re(zeta^3) / 4`, `zeta = xi1 + i xi2`, so the
//! stepper treats it exactly with an integrating factor.

use num_complex::Complex64;

use crate::data::Potential;
use crate::error::{NvError, Result};
use crate::grid::ComplexField;
use crate::spectral::{apply_multiplier, dbar_inverse_dz, spectral_derivative, DiffOp};
use crate::symmetry::CheckReport;

/// Largest growth of `max |q|` accepted in one step before the stepper
/// reports a blow-up.
pub const BLOW_UP_FACTOR: f64 = 10.0;

/// Symbol of the linear part `-d^3 - dbar^3`.
fn linear_symbol(a: (f64, bool), b: (f64, bool)) -> Complex64 {
    -(DiffOp::Dz3.symbol(a, b) + DiffOp::Dzbar3.symbol(a, b))
}

/// `(3/4) d(q v) + (3/4) dbar(q conj(v))`.
fn nonlinear_part(q: &ComplexField) -> ComplexField {
    let v = dbar_inverse_dz(q);
    let qv = q.zip_map(&v, |a, b| a * b).expect("same grid");
    let qvbar = q.zip_map(&v, |a, b| a * b.conj()).expect("same grid");
    let d = spectral_derivative(&qv, DiffOp::Dz);
    let db = spectral_derivative(&qvbar, DiffOp::Dzbar);
    d.zip_map(&db, |x, y| 0.75 * (x + y)).expect("same grid")
}

/// Right-hand side of the Novikov-Veselov equation.
pub fn nv_rhs(q: &ComplexField) -> ComplexField {
    let linear = apply_multiplier(q, linear_symbol);
    linear.add(&nonlinear_part(q)).expect("same grid")
}

/// Which terms the stepper keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvModel {
    Full,
    /// Only the dispersive linear part; the exact solution is a phase per
    /// Fourier mode.
    Linearized,
}

/// A potential together with its auxiliary field at time `tau`.
#[derive(Debug, Clone)]
pub struct NvState {
    pub q: Potential,
    /// `dbar^{-1} d q`.
    pub v: ComplexField,
    pub tau: f64,
}

impl NvState {
    pub fn new(q: Potential, tau: f64) -> Self {
        let v = dbar_inverse_dz(q.field());
        Self { q, v, tau }
    }
}

/// One integrating-factor Runge-Kutta step of size `dt`.
///
/// Writing the equation as `q' = L q + N(q)` with `E = exp(L dt / 2)`:
/// `k1 = N(q)`, `k2 = N(E(q + dt/2 k1))`, `k3 = N(E q + dt/2 k2)`,
/// `k4 = N(E^2 q + dt E k3)` and
/// `q_new = E^2 q + dt/6 (E^2 k1 + 2 E (k2 + k3) + k4)`.
pub fn nv_step(state: &NvState, dt: f64, model: NvModel) -> Result<NvState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(NvError::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let q = state.q.field();
    let half = |f: &ComplexField| apply_multiplier(f, |a, b| (linear_symbol(a, b) * (0.5 * dt)).exp());
    let full = |f: &ComplexField| apply_multiplier(f, |a, b| (linear_symbol(a, b) * dt).exp());
    let next = match model {
        NvModel::Linearized => full(q),
        NvModel::Full => {
            let axpy = |x: &ComplexField, c: f64, y: &ComplexField| x.zip_map(y, |a, b| a + c * b).expect("same grid");
            let k1 = nonlinear_part(q);
            let k2 = nonlinear_part(&half(&axpy(q, 0.5 * dt, &k1)));
            let eq = half(q);
            let k3 = nonlinear_part(&axpy(&eq, 0.5 * dt, &k2));
            let e2q = full(q);
            let k4 = nonlinear_part(&axpy(&e2q, dt, &half(&k3)));
            let mid = half(&k2.add(&k3).expect("same grid"));
            let combo = full(&k1)
                .zip_map(&mid, |a, b| a + 2.0 * b)
                .and_then(|c| c.add(&k4))
                .expect("same grid");
            axpy(&e2q, dt / 6.0, &combo)
        }
    };
    let before = q.max_abs();
    let after = next.max_abs();
    if !next.is_finite() || (before > 0.0 && after > BLOW_UP_FACTOR * before) {
        return Err(NvError::InvalidArgument(format!(
            "time step blew up at tau = {}: max |q| went from {before:e} to {after:e}",
            state.tau
        )));
    }
    Ok(NvState::new(Potential::new(next)?, state.tau + dt))
}

/// Takes `steps` steps of size `dt`, keeping every `save_every`-th state
/// (and the initial one).
pub fn nv_run(initial: NvState, dt: f64, steps: usize, save_every: usize, model: NvModel) -> Result<Vec<NvState>> {
    if save_every == 0 {
        return Err(NvError::InvalidArgument("save interval must be at least 1".into()));
    }
    let mut frames = vec![initial.clone()];
    let mut state = initial;
    for step in 1..=steps {
        state = nv_step(&state, dt, model)?;
        if step % save_every == 0 {
            frames.push(state.clone());
        }
    }
    Ok(frames)
}

/// Residual of a family `q(tau)` against the equation, from central
/// differences at `delta, delta/2, ...`.
#[derive(Debug, Clone)]
pub struct NvResidualStudy {
    pub tau: f64,
    /// Step of each level, halving from the first.
    pub deltas: Vec<f64>,
    /// `||D(delta) - rhs|| / ||rhs||` per level, `D` the central difference.
    pub residuals: Vec<f64>,
    /// The same with the opposite time orientation, `||D + rhs|| / ||rhs||`.
    pub reversed_residuals: Vec<f64>,
    /// `Re <D, rhs> / ||rhs||^2` per level: 1 when the family solves the
    /// equation and -1 when it solves it with time reversed.
    pub projections: Vec<f64>,
    /// `||D(delta) - D(delta/2)||` over consecutive levels; a smooth family
    /// makes consecutive values shrink about fourfold.
    pub difference_changes: Vec<f64>,
    pub rhs_norm: f64,
}

impl NvResidualStudy {
    /// Ratios of consecutive entries of `difference_changes`.
    pub fn richardson_ratios(&self) -> Vec<f64> {
        self.difference_changes.windows(2).map(|w| w[0] / w[1]).collect()
    }

    /// Informative report of the finest level; it never gates.
    pub fn report(&self) -> CheckReport {
        let last = self.residuals.len() - 1;
        let vacuous = self.rhs_norm == 0.0;
        let residual = if vacuous { 0.0 } else { self.residuals[last] };
        let mut r = CheckReport::from_relative("nv_residual", residual * self.rhs_norm, residual, f64::INFINITY)
            .with_meta("tau", self.tau)
            .with_meta("delta", self.deltas[last])
            .with_meta("reversed_residual", if vacuous { 0.0 } else { self.reversed_residuals[last] })
            .with_meta("projection", if vacuous { 0.0 } else { self.projections[last] })
            .with_meta("vacuous", vacuous);
        for (i, ratio) in self.richardson_ratios().iter().enumerate() {
            r = r.with_meta(&format!("richardson_ratio_{i}"), ratio);
        }
        r
    }
}

/// Compares `(q(tau + d) - q(tau - d)) / 2d` with `nv_rhs(q(tau))` for
/// `d = delta / 2^m`, `m = 0..=halvings`. `pipeline` produces the potential
/// at a given time (for instance by evolving scattering data and inverting).
pub fn ism_nv_residual(
    pipeline: impl Fn(f64) -> Result<ComplexField>,
    tau: f64,
    delta: f64,
    halvings: usize,
) -> Result<NvResidualStudy> {
    if !(delta > 0.0 && delta <= tau.max(delta) && tau - delta >= 0.0) {
        return Err(NvError::InvalidArgument(format!(
            "need 0 < delta <= tau for central differences, got tau = {tau}, delta = {delta}"
        )));
    }
    let q = pipeline(tau)?;
    let rhs = nv_rhs(&q);
    let rhs_norm = rhs.l2_norm();
    let mut deltas = Vec::new();
    let mut diffs: Vec<ComplexField> = Vec::new();
    let mut residuals = Vec::new();
    let mut reversed = Vec::new();
    let mut projections = Vec::new();
    for m in 0..=halvings {
        let d = delta / f64::powi(2.0, m as i32);
        let plus = pipeline(tau + d)?;
        let minus = pipeline(tau - d)?;
        let cd = plus.zip_map(&minus, |a, b| (a - b) / (2.0 * d))?;
        let guard = |x: f64| if rhs_norm == 0.0 { 0.0 } else { x / rhs_norm };
        residuals.push(guard(cd.sub(&rhs)?.l2_norm()));
        reversed.push(guard(cd.add(&rhs)?.l2_norm()));
        let inner: f64 = cd.values().iter().zip(rhs.values()).map(|(a, b)| (a * b.conj()).re).sum();
        projections.push(if rhs_norm == 0.0 { 0.0 } else { inner * cd.grid().cell_area() / (rhs_norm * rhs_norm) });
        deltas.push(d);
        diffs.push(cd);
    }
    let difference_changes = diffs
        .windows(2)
        .map(|w| w[0].sub(&w[1]).map(|d| d.l2_norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(NvResidualStudy {
        tau,
        deltas,
        residuals,
        reversed_residuals: reversed,
        projections,
        difference_changes,
        rhs_norm,
    })
}
