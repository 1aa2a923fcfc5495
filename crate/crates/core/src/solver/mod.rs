//! Semi-implicit time integration of the reduced flow system with the
//! regularized constitutive closure.
//!
//! One step runs a small number of Picard sweeps of
//! (momentum predictor -> pressure projection -> wall closure refresh),
//! with the plug viscosity `tau/(|D| + eps)` and the wall coefficient
//! `s*/(|v_tau| + eps)` lagged to the previous iterate, followed by the
//! pore-pressure transport with the end-of-step velocity. The discrete
//! energy budget of every step is recorded exactly (see [`StepBudget`]).

mod config;
mod darcy;
mod forcing;
mod momentum;
mod projection;
mod state;
mod stepper;
mod walls;

pub use config::{convection_cutoff, SolverConfig, SolverError};
pub use darcy::{darcy_velocity, DarcyParams};
pub use forcing::{BodyForce, ForcingSpec, PsSpec, SourceSpec};
pub use momentum::{
    cell_norms, cell_to_off_sites, convection, dof_mask, dof_offsets, effective_viscosity,
    flatten, off_site_norms, regularized_stress_field, unflatten, EffectiveViscosity,
    MomentumSystem,
};
pub use projection::{project, project_detailed, ProjectionOutcome};
pub use state::{SimulationState, StepBudget};
pub use stepper::{
    choose_dt, initial_state, momentum_predictor, pore_pressure_step, step, step_with_dt,
    yield_stress_cells,
};
pub use walls::{
    enforce_slip, for_each_stick_slip_site, tangential_vector, WallCoeffs, WallKind, WallSpec,
};
