//! Spectral solvers and regularizers for backward nonlinear space-fractional
//! diffusion on `(0, pi)` with Neumann boundary conditions and noisy data.
#![no_std]

extern crate alloc;

pub mod bounds;
pub mod error;
pub mod forward;
pub mod grid;
pub mod noise;
pub mod problem;
pub mod quasi_rev;
pub mod spectral;
pub mod truncation;

pub use error::{Error, Result};
pub use forward::{forward_solve, forward_solve_refined, mild_residual, Integrator, Trajectory};
pub use grid::TimeGrid;
pub use noise::{NoiseSpec, ObservedData};
pub use problem::{Coefficient, Nonlinearity, ProblemInstance, Source};
pub use spectral::{GridSamples, NormSpec, SpectralField};
