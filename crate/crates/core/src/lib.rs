pub mod data;
pub mod dbar;
pub mod error;
pub mod evolution;
pub mod faddeev;
pub mod fft;
pub mod gmres;
pub mod grid;
pub mod nvf;
pub mod nvpde;
pub mod par;
pub mod pipeline;
pub mod potentials;
pub mod special;
pub mod spectral;
pub mod symmetry;

pub use data::{Potential, ScatteringData, Variant};
pub use error::{NvError, Result};
pub use grid::{ComplexField, Grid2D, Plane};
