//! Simulator and constitutive toolkit for incompressible viscoplastic flow
//! in which the yield stress is activated by an evolving pore pressure.
//!
//! The crate is organized around five layers:
//!
//! * [`constitutive`] — pointwise material laws: the activated Bingham
//!   response in all of its equivalent forms, the regularized (smoothed)
//!   closure, and the stick-slip wall law.
//! * [`grid`] — staggered (MAC) Cartesian fields and the discrete operators
//!   built on them: symmetric gradient, divergence, Neumann-Poisson solve,
//!   and upwind advection-diffusion.
//! * [`solver`] — semi-implicit time stepping: momentum predictor, pressure
//!   projection, wall closure, pore-pressure transport, and the Darcy
//!   post-process for the interstitial velocity.
//! * [`diagnostics`] — per-step measurement of the discrete energy budget,
//!   constitutive constraint residuals, pore-pressure extrema and plug
//!   region extraction.
//! * [`config`], [`scenarios`], [`runner`] — configuration parsing, built-in
//!   scenarios, and batch run orchestration with CSV/snapshot output.

pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod grid;
pub mod runner;
pub mod scenarios;
pub mod solver;
pub mod util;

pub use config::RunConfig;
pub use constitutive::{MaterialParams, SymTensor};
pub use grid::{ScalarField, StaggeredGrid, SymTensorField, VectorField};
pub use solver::{DarcyParams, SimulationState, SolverConfig};
