//! Pseudo-spectral solver and verification harness for a rotating shallow
//! water model driven by divergence-free transport noise on the torus
//! [0,2π)².
//!
//! The state X = (u, h) (velocity pair and surface height) evolves by
//!
//!   dX + [𝒜(X)] dt + σ·∇X dB = ½ ∇·(a ∇X) dt + γ ΔX dt,
//!
//! assembled inside a dyadic Fourier block B_N, N = 2^J, with exactly
//! dealiased products. Alongside the integrator the crate ships the
//! diagnostics that certify its structure numerically: pathwise energy
//! balance, the advection and noise cancellation identities, dyadic energy
//! fluxes, a priori norm bounds, and Cauchy refinement studies across
//! resolutions driven by one shared Brownian path.

pub mod config;
pub mod diagnostics;
mod error;
pub mod io;
pub mod model;
pub mod noise;
pub mod runner;
pub mod sde;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{ModelParams, Regime, State};
pub use spectral::{GridSpec, SpectralField};
