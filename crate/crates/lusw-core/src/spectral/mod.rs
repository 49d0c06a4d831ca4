//! Fourier analysis on the 2-torus: fields, grids, Littlewood-Paley blocks
//! and exact spectral calculus.

mod field;
mod grid;
pub mod lp;
pub mod ops;

pub use field::{SpectralField, TORUS_AREA};
pub use grid::{
    dealiased_product, exact_product, inverse_transform, lp_norm, quadrature, transform, GridSpec,
};

pub(crate) use field::covering_level;
pub(crate) use grid::{synthesize, transform_to_level};
