//! Numerical workbench for variation-norm function spaces, Fourier
//! projections adapted to the wave cone, and a pseudo-spectral solver for
//! wave maps into the two-sphere.
//!
//! Module map:
//! - [`fourier`]: periodic grids, unitary transforms, derivatives, mixed norms.
//! - [`multipliers`]: dyadic, modulation, angular and cubic projections; wave propagators.
//! - [`variation`]: p-variation, step functions, atoms, the dual pairing and norm bounds.
//! - [`wavemaps`]: null form, Duhamel operator, time stepping, Picard iteration, scattering.
//! - [`estimates`]: sampled checks of the quantitative inequalities.

pub mod error;
pub mod estimates;
pub mod fourier;
pub mod multipliers;
pub mod rng;
pub mod variation;
pub mod wavemaps;

pub use error::{Error, Result};
pub use fourier::{Grid, SpaceTimeField, SpatialField, SpectralField, TimeGrid};
