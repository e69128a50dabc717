//! Domain values exchanged between the stages of the pipeline.

use num_complex::Complex64;

use crate::error::{NvError, Result};
use crate::grid::{ComplexField, Grid2D, Plane};
use crate::special::SmoothCutoff;

/// The two families of CGO solutions and scattering transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Solutions behaving like `exp(i k z)`.
    Plus,
    /// Solutions behaving like `exp(i k conj(z))`.
    Minus,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Plus => "plus",
            Variant::Minus => "minus",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "plus" | "+" => Ok(Variant::Plus),
            "minus" | "-" => Ok(Variant::Minus),
            other => Err(NvError::Format(format!("unknown variant `{other}`"))),
        }
    }
}

/// Relative size of imaginary parts below which a field counts as real.
pub const REALITY_TOL: f64 = 1e-12;

/// Whether `max |Im f| <= REALITY_TOL * max(1, max |Re f|)`.
pub fn is_real_field(f: &ComplexField) -> bool {
    f.max_abs_im() <= REALITY_TOL * f.max_abs_re().max(1.0)
}

/// A potential `q` on a z-grid, optionally with the conductivity it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    field: ComplexField,
    gamma: Option<ComplexField>,
    is_real: bool,
}

impl Potential {
    pub fn new(field: ComplexField) -> Result<Self> {
        if field.grid().plane() != Plane::Z {
            return Err(NvError::InvalidArgument("a potential lives on a z-plane grid".into()));
        }
        if !field.is_finite() {
            return Err(NvError::InvalidArgument("potential has non-finite samples".into()));
        }
        let is_real = is_real_field(&field);
        Ok(Self {
            field,
            gamma: None,
            is_real,
        })
    }

    /// Attaches a conductivity, checking positivity and `gamma = 1` on the
    /// outermost ring of samples.
    pub fn with_gamma(field: ComplexField, gamma: ComplexField) -> Result<Self> {
        field.grid().ensure_same(gamma.grid(), "potential and conductivity")?;
        let min_re = gamma.values().iter().fold(f64::INFINITY, |m, v| m.min(v.re));
        if min_re <= 0.0 {
            return Err(NvError::InvalidArgument(format!(
                "conductivity must be positive, min Re = {min_re}"
            )));
        }
        check_unit_boundary(&gamma)?;
        let mut p = Self::new(field)?;
        p.gamma = Some(gamma);
        Ok(p)
    }

    pub fn zero(grid: Grid2D) -> Result<Self> {
        Self::new(ComplexField::zeros(grid))
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn gamma(&self) -> Option<&ComplexField> {
        self.gamma.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn grid(&self) -> &Grid2D {
        self.field.grid()
    }

    /// Smallest radius outside which `|q| <= rel_tol * max |q|`, rounded up
    /// by one grid cell. Zero for the zero potential.
    pub fn support_radius(&self, rel_tol: f64) -> f64 {
        let max = self.field.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let grid = self.grid();
        let thresh = rel_tol * max;
        let r = (0..grid.len())
            .filter(|&i| self.field.values()[i].norm() > thresh)
            .map(|i| grid.point_flat(i).norm())
            .fold(0.0, f64::max);
        r + grid.spacing()
    }

    /// `q` multiplied by a smooth radial window that is 1 for `|z| <= inner`
    /// and 0 for `|z| >= outer`. The conductivity is dropped.
    pub fn windowed(&self, inner: f64, outer: f64) -> Result<Self> {
        let cut = SmoothCutoff::new(inner, outer);
        let grid = *self.grid();
        let values = self
            .field
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| v * cut.value(grid.point_flat(i).norm()))
            .collect();
        Self::new(ComplexField::from_values(grid, values)?)
    }

    /// Real part of `q` as a potential (used after reconstructions whose
    /// imaginary part is numerical noise).
    pub fn real_part(&self) -> Result<Self> {
        Self::new(self.field.map(|v| Complex64::new(v.re, 0.0)))
    }
}

fn check_unit_boundary(gamma: &ComplexField) -> Result<()> {
    let grid = gamma.grid();
    let worst = (0..grid.len())
        .filter(|&i| grid.on_boundary(i))
        .map(|i| (gamma.values()[i] - 1.0).norm())
        .fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(NvError::InvalidArgument(format!(
            "conductivity must equal 1 on the boundary ring (max deviation {worst:e})"
        )));
    }
    Ok(())
}

/// Scattering data `t(k)` on a k-grid, truncated to the disc `|k| <= k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    field: ComplexField,
    variant: Variant,
    k_max: f64,
    tau: f64,
    hierarchy_n: u32,
}

impl ScatteringData {
    /// Wraps samples, storing 0 at `k = 0` and outside the truncation disc.
    pub fn new(field: ComplexField, variant: Variant, k_max: f64) -> Result<Self> {
        if field.grid().plane() != Plane::K {
            return Err(NvError::InvalidArgument("scattering data lives on a k-plane grid".into()));
        }
        if !(k_max > 0.0) {
            return Err(NvError::InvalidArgument(format!("k_max must be positive, got {k_max}")));
        }
        if !field.is_finite() {
            return Err(NvError::InvalidArgument("scattering data has non-finite samples".into()));
        }
        let mut field = field;
        let grid = *field.grid();
        let origin = grid.origin_flat();
        for (i, v) in field.values_mut().iter_mut().enumerate() {
            if i == origin || grid.point_flat(i).norm() > k_max {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self {
            field,
            variant,
            k_max,
            tau: 0.0,
            hierarchy_n: 3,
        })
    }

    pub fn zero(grid: Grid2D, variant: Variant) -> Result<Self> {
        let k_max = grid.half_width();
        Self::new(ComplexField::zeros(grid), variant, k_max)
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn grid(&self) -> &Grid2D {
        self.field.grid()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    /// Evolution time applied so far.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Index of the hierarchy flow used for evolution (3 is the NV flow).
    pub fn hierarchy_n(&self) -> u32 {
        self.hierarchy_n
    }

    pub(crate) fn with_evolution(mut self, field: ComplexField, tau: f64, n: u32) -> Self {
        self.field = field;
        self.tau = tau;
        self.hierarchy_n = n;
        self
    }

    /// Same samples labelled with provenance, e.g. after reading from disk.
    pub fn with_provenance(mut self, tau: f64, hierarchy_n: u32) -> Self {
        self.tau = tau;
        self.hierarchy_n = hierarchy_n;
        self
    }

    /// Relabels the variant, keeping the samples.
    pub fn as_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }
}
