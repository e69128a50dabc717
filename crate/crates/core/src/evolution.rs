//! Linear evolution of scattering data along the Novikov-Veselov hierarchy.
//!
//! The flow with odd index `n >= 3` multiplies `t(k)` pointwise by
//! `exp(-i^n (k^n + conj(k)^n) tau)`, which for `n = 3` is
//! `exp(i tau (k^3 + conj(k)^3))`. The same multiplier applies to both
//! variants.

use num_complex::Complex64;

use crate::data::ScatteringData;
use crate::error::{NvError, Result};
use crate::grid::ComplexField;

/// Time and hierarchy index of an evolution step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    tau: f64,
    n: u32,
}

impl EvolutionParams {
    /// Validated parameters: `tau` finite and non-negative, `n` odd and `>= 3`.
    pub fn new(tau: f64, n: u32) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(NvError::InvalidArgument(format!(
                "evolution time must be finite and non-negative, got {tau}"
            )));
        }
        if n < 3 || n % 2 == 0 {
            return Err(NvError::InvalidArgument(format!(
                "hierarchy index must be odd and at least 3, got {n}"
            )));
        }
        Ok(Self { tau, n })
    }

    /// The Novikov-Veselov flow (`n = 3`) for time `tau`.
    pub fn nv(tau: f64) -> Result<Self> {
        Self::new(tau, 3)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// The unimodular multiplier at `k`.
    ///
    /// `k^n` is formed by repeated complex multiplication (no polar form), so
    /// `k` and `exp(2 pi i / n) k` give the same value whenever both are exact.
    pub fn multiplier(&self, k: Complex64) -> Complex64 {
        let mut kn = k;
        for _ in 1..self.n {
            kn *= k;
        }
        // -i^n is +i for n = 3 mod 4 and -i for n = 1 mod 4.
        let sign = if self.n % 4 == 3 { 1.0 } else { -1.0 };
        let phase = sign * 2.0 * kn.re * self.tau;
        Complex64::new(phase.cos(), phase.sin())
    }
}

/// Evolves `t0` by `params.tau`. Evolution times add up, so evolving data
/// that already carries a nonzero `tau` composes the two flows; mixing flows
/// of different hierarchy index is rejected.
pub fn evolve(t0: &ScatteringData, params: EvolutionParams) -> Result<ScatteringData> {
    if t0.tau() != 0.0 && t0.hierarchy_n() != params.n {
        return Err(NvError::InvalidArgument(format!(
            "data already evolved along flow n = {} cannot be evolved along n = {}",
            t0.hierarchy_n(),
            params.n
        )));
    }
    let total = t0.tau() + params.tau;
    if params.tau == 0.0 {
        return Ok(t0.clone().with_evolution(t0.field().clone(), total, params.n));
    }
    let grid = *t0.grid();
    let values = t0
        .field()
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * params.multiplier(grid.point_flat(i)))
        .collect();
    let field = ComplexField::from_values(grid, values)?;
    Ok(t0.clone().with_evolution(field, total, params.n))
}

/// Evolves further by `tau2` along the flow the data already follows.
pub fn compose_evolution(t: &ScatteringData, tau2: f64) -> Result<ScatteringData> {
    evolve(t, EvolutionParams::new(tau2, t.hierarchy_n())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Variant;
    use crate::grid::{Grid2D, Plane};

    fn radial_data() -> ScatteringData {
        let g = Grid2D::new(32, 4.0, Plane::K).unwrap();
        let f = ComplexField::from_fn(g, |k| {
            let r2 = k.norm_sqr();
            Complex64::new(r2 * (-r2).exp(), 0.0)
        });
        ScatteringData::new(f, Variant::Plus, 3.5).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(EvolutionParams::new(1.0, 2).is_err());
        assert!(EvolutionParams::new(1.0, 1).is_err());
        assert!(EvolutionParams::new(-1.0, 3).is_err());
        assert!(EvolutionParams::new(f64::NAN, 3).is_err());
        assert!(EvolutionParams::new(0.5, 5).is_ok());
    }

    #[test]
    fn zero_time_is_bit_exact() {
        let t = radial_data();
        let out = evolve(&t, EvolutionParams::nv(0.0).unwrap()).unwrap();
        assert_eq!(out.field().values(), t.field().values());
    }

    #[test]
    fn nv_multiplier_matches_cubic_phase() {
        let p = EvolutionParams::nv(0.3).unwrap();
        let k = Complex64::new(0.7, -1.1);
        let expect = (Complex64::i() * 0.3 * (k.powi(3) + k.conj().powi(3))).exp();
        assert!((p.multiplier(k) - expect).norm() < 1e-14);
    }

    #[test]
    fn fifth_flow_multiplier_sign() {
        // -i^5 = -i, so the multiplier is exp(-i tau (k^5 + conj(k)^5)).
        let p = EvolutionParams::new(0.2, 5).unwrap();
        let k = Complex64::new(0.4, 0.9);
        let expect = (-Complex64::i() * 0.2 * (k.powi(5) + k.conj().powi(5))).exp();
        assert!((p.multiplier(k) - expect).norm() < 1e-14);
    }

    #[test]
    fn mixing_flows_is_rejected() {
        let t = evolve(&radial_data(), EvolutionParams::nv(0.1).unwrap()).unwrap();
        assert!(evolve(&t, EvolutionParams::new(0.1, 5).unwrap()).is_err());
        let back = compose_evolution(&t, 0.2).unwrap();
        assert!((back.tau() - 0.3).abs() < 1e-15);
        assert_eq!(back.hierarchy_n(), 3);
    }
}
