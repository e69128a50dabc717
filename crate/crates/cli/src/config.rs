//! Solver configuration as a plain-text `key:value` file.
//!
//! Every field is written on its own line. Floats use Rust's shortest
//! round-trip notation, so parsing the written text gives back an identical
//! configuration. Keys missing from a file keep their defaults; unknown keys
//! are an error so that typos do not pass silently.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use nvism::dbar::DbarOptions;
use nvism::faddeev::ForwardOptions;
use nvism::gmres::GmresConfig;
use nvism::spectral::CauchyKernel;
use nvism::{Grid2D, NvError, Plane, Result};

/// All settings of a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub z_n: usize,
    pub z_s: f64,
    pub k_n: usize,
    pub k_max: f64,
    pub gmres_tol: f64,
    pub gmres_max_iters: usize,
    pub gmres_restart: usize,
    pub dbar_kernel: CauchyKernel,
    pub bump_c: f64,
    pub bump_r: f64,
    pub tau: f64,
    pub hierarchy_n: u32,
    /// Radial window applied to reconstructed potentials before they are fed
    /// back into the direct problem: 1 inside `window_inner`, 0 beyond
    /// `window_outer`.
    pub window_inner: f64,
    pub window_outer: f64,
    pub roundtrip_k_min: f64,
    pub roundtrip_k_max: f64,
    pub tol_roundtrip: f64,
    pub tol_conj_pair: f64,
    pub tol_plus_minus: f64,
    pub tol_radial: f64,
    pub tol_threefold: f64,
    pub tol_q_symmetry: f64,
    pub tol_mu_conjugation: f64,
    pub nv_dt: f64,
    /// Stability budget: `nv_dt` may not exceed it.
    pub nv_dt_max: f64,
    pub nv_steps: usize,
    pub nv_save_every: usize,
    pub nv_delta: f64,
    pub nv_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            z_n: 128,
            z_s: 8.0,
            k_n: 128,
            k_max: 8.0,
            gmres_tol: 1e-10,
            gmres_max_iters: 400,
            gmres_restart: 60,
            dbar_kernel: CauchyKernel::TruncatedSpectral,
            bump_c: 1.0,
            bump_r: 3.0,
            tau: 0.0,
            hierarchy_n: 3,
            window_inner: 3.25,
            window_outer: 3.75,
            roundtrip_k_min: 0.5,
            roundtrip_k_max: 4.0,
            tol_roundtrip: 5e-2,
            tol_conj_pair: 1e-6,
            tol_plus_minus: 1e-6,
            tol_radial: 1e-6,
            tol_threefold: 1e-4,
            tol_q_symmetry: 1e-3,
            tol_mu_conjugation: 1e-6,
            nv_dt: 1e-4,
            nv_dt_max: 1e-3,
            nv_steps: 100,
            nv_save_every: 10,
            nv_delta: 1e-5,
            nv_halvings: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| NvError::Format(format!("bad value {value:?} for {key}")))
}

/// Expands to the serializer and parser over the listed fields, so the two
/// can never disagree about the set of keys.
macro_rules! config_fields {
    ($($field:ident),* $(,)?) => {
        impl SolverConfig {
            /// The `key:value` text of every field, in declaration order.
            pub fn to_text(&self) -> String {
                let mut out = String::new();
                $( writeln!(out, "{}:{}", stringify!($field), Field::render(&self.$field)).expect("string write"); )*
                out
            }

            fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $( stringify!($field) => self.$field = Field::read(key, value)?, )*
                    other => return Err(NvError::Format(format!("unknown config key {other:?}"))),
                }
                Ok(())
            }
        }
    };
}

config_fields!(
    z_n, z_s, k_n, k_max, gmres_tol, gmres_max_iters, gmres_restart, dbar_kernel, bump_c, bump_r, tau,
    hierarchy_n, window_inner, window_outer, roundtrip_k_min, roundtrip_k_max, tol_roundtrip, tol_conj_pair,
    tol_plus_minus, tol_radial, tol_threefold, tol_q_symmetry, tol_mu_conjugation, nv_dt, nv_dt_max, nv_steps,
    nv_save_every, nv_delta, nv_halvings,
);

/// Text form of one config value.
trait Field: Sized {
    fn render(&self) -> String;
    fn read(key: &str, value: &str) -> Result<Self>;
}

macro_rules! display_field {
    ($($t:ty),*) => {$(
        impl Field for $t {
            fn render(&self) -> String {
                self.to_string()
            }
            fn read(key: &str, value: &str) -> Result<Self> {
                parse(key, value)
            }
        }
    )*};
}

display_field!(usize, u32, f64);

impl Field for CauchyKernel {
    fn render(&self) -> String {
        self.tag().to_string()
    }
    fn read(_key: &str, value: &str) -> Result<Self> {
        CauchyKernel::from_tag(value)
    }
}

impl SolverConfig {
    /// Parses `key:value` lines; blank lines and lines starting with `#`
    /// are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| NvError::Format(format!("line {}: expected key:value, got {line:?}", no + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Checks the cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        self.z_grid()?;
        self.k_grid()?;
        let bad = |what: String| Err(NvError::InvalidArgument(what));
        if !(self.k_max > 0.0) {
            return bad(format!("k_max must be positive, got {}", self.k_max));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return bad(format!("tau must be finite and non-negative, got {}", self.tau));
        }
        if self.hierarchy_n < 3 || self.hierarchy_n % 2 == 0 {
            return bad(format!("hierarchy_n must be odd and at least 3, got {}", self.hierarchy_n));
        }
        if !(self.window_inner > 0.0 && self.window_inner < self.window_outer) {
            return bad("window_inner must be positive and below window_outer".into());
        }
        let reach = self.z_s / 2.0 - 2.0 * self.z_s / self.z_n as f64;
        if self.window_outer > reach {
            return bad(format!(
                "window_outer = {} exceeds s/2 - h = {reach}, the largest support the direct solver accepts",
                self.window_outer
            ));
        }
        if !(self.nv_dt > 0.0 && self.nv_dt <= self.nv_dt_max) {
            return bad(format!(
                "nv_dt = {} must be positive and within the stability budget nv_dt_max = {}",
                self.nv_dt, self.nv_dt_max
            ));
        }
        if self.nv_save_every == 0 || self.gmres_restart == 0 || self.gmres_max_iters == 0 {
            return bad("nv_save_every, gmres_restart and gmres_max_iters must be positive".into());
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn z_grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.z_n, self.z_s, Plane::Z)
    }

    pub fn k_grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.k_n, self.k_max, Plane::K)
    }

    pub fn gmres(&self) -> GmresConfig {
        GmresConfig {
            restart: self.gmres_restart,
            max_iters: self.gmres_max_iters,
            tol: self.gmres_tol,
        }
    }

    pub fn forward_options(&self) -> ForwardOptions {
        ForwardOptions {
            gmres: self.gmres(),
            ..ForwardOptions::default()
        }
    }

    pub fn dbar_options(&self) -> DbarOptions {
        DbarOptions {
            gmres: self.gmres(),
            kernel: self.dbar_kernel,
            ..DbarOptions::default()
        }
    }
}
