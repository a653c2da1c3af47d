//! 2D coupled nonlinear Schrödinger (CNLS) solver with perfectly matched
//! layers for systems with mixed spatial derivatives.
//!
//! The crate covers the full pipeline: the PDE system and grid containers
//! ([`model`]), closed-form Laplace–Fourier layer analysis and stability
//! thresholds ([`analysis`]), absorption profiles and PML coefficient fields
//! ([`pml`]), 4th-order finite-difference operator assembly
//! ([`discretization`]), IMEX additive Runge–Kutta time stepping
//! ([`timestepper`]), independent reference solutions ([`reference`]) and a
//! scenario/sweep harness with persistence ([`experiments`]).

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod experiments;
pub mod model;
pub mod pml;
pub mod reference;
pub mod sparse;
pub mod timestepper;

pub use error::{Error, Result};
