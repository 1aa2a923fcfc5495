use crate::grid::{ScalarField, SymTensorField, VectorField};

/// Exact scalar ledger of one accepted step, recorded with the same sums
/// the solver used. The residual closes the discrete energy identity to
/// linear-solver precision:
///
/// `E_new - E_old + num_diss + proj_diss
///    + dt (conv + visc + plastic + robin - body) ~ 0`
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepBudget {
    pub dt: f64,
    pub kinetic_old: f64,
    pub kinetic_new: f64,
    /// First-order numerical dissipation `rho vol |v* - v^n|^2 / 2`.
    pub numerical_dissipation: f64,
    /// Projection dissipation `dt^2/(2 rho) vol |grad q|^2`.
    pub projection_dissipation: f64,
    /// Work of the explicit convection term against `v*` (times rho vol).
    pub convection_work: f64,
    /// Newtonian part of the stress form work.
    pub viscous_work: f64,
    /// Plug-viscosity part of the stress form work.
    pub plastic_work: f64,
    /// Stick-slip Robin wall dissipation.
    pub robin_work: f64,
    /// Body-force power input.
    pub body_work: f64,
    /// Defect of the identity above (linear-solver residual scale).
    pub energy_residual: f64,
    pub picard_sweeps: usize,
}

/// Full simulation state after a completed step.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub t: f64,
    pub step_index: usize,
    /// Mixture velocity (discretely divergence-free, wall-constrained).
    pub v: VectorField,
    /// Zero-mean kinematic pressure from the last projection.
    pub p: ScalarField,
    /// Pore pressure.
    pub p_f: ScalarField,
    /// Cached regularized extra stress, consistent with `v`.
    pub z: SymTensorField,
    /// Post-step divergence residual (max-norm).
    pub div_residual_inf: f64,
    /// Ledger of the step that produced this state.
    pub budget: StepBudget,
}

impl SimulationState {
    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.p.is_finite() && self.p_f.is_finite() && self.z.is_finite()
    }

    /// Kinetic energy `rho/2 sum |v|^2 vol` over all face sites.
    pub fn kinetic_energy(&self, rho_star: f64) -> f64 {
        0.5 * rho_star * self.v.dot_vol(&self.v)
    }
}
