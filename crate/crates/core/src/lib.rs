//! Numerical library for relativistic spin-0 wave-packet scattering outside
//! compact obstacles with confined magnetic flux: spectral free/interacting
//! evolution, finite-horizon wave and scattering operators, the closed-form
//! high-momenta limit with convergence-rate measurement, and the inverse
//! pipeline that recovers the electric potential, the exterior magnetic
//! field, and hole fluxes modulo 2 pi.

pub mod error;
pub mod math;

pub mod grid;

pub use error::{Error, Result};

pub mod geometry;
pub mod potentials;

pub mod dynamics;

pub mod asymptotics;
pub mod inversion;

pub mod harness;
