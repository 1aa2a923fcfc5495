use super::forcing::ForcingSpec;
use super::state::SimulationState;
use crate::constitutive::ParamError;
use crate::grid::{idx3, VectorField};

/// Constants of the interstitial-velocity post-process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarcyParams {
    /// Reference porosity, in (0, 1).
    pub phi0: f64,
    /// Fluid dynamic viscosity (Pa s), > 0.
    pub mu_f: f64,
    /// Permeability (m^2), > 0.
    pub k0: f64,
    /// Fluid material density (kg/m^3), > 0.
    pub rho_f: f64,
}

impl DarcyParams {
    pub fn new(phi0: f64, mu_f: f64, k0: f64, rho_f: f64) -> Result<Self, ParamError> {
        let p = DarcyParams {
            phi0,
            mu_f,
            k0,
            rho_f,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let checks: [(&'static str, f64, bool); 4] = [
            ("phi0", self.phi0, self.phi0 > 0.0 && self.phi0 < 1.0),
            ("mu_f", self.mu_f, self.mu_f > 0.0),
            ("k0", self.k0, self.k0 > 0.0),
            ("rho_f", self.rho_f, self.rho_f > 0.0),
        ];
        for (field, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err(ParamError {
                    field,
                    message: format!("out of range (got {value})"),
                });
            }
        }
        Ok(())
    }
}

impl Default for DarcyParams {
    fn default() -> Self {
        DarcyParams {
            phi0: 0.05,
            mu_f: 1.0,
            k0: 1.0,
            rho_f: 1.0,
        }
    }
}

/// Interstitial fluid velocity recovered from the mixture velocity and the
/// pore-pressure gradient:
///
/// `v_f = v - k0/(phi0 mu_f) (grad p_f - rho_f b)`
///
/// A pure post-process: it never feeds back into the dynamics. The drift is
/// applied on interior faces only (the boundary is impermeable).
pub fn darcy_velocity(
    state: &SimulationState,
    darcy: &DarcyParams,
    forcing: &ForcingSpec,
) -> VectorField {
    let grid = state.v.grid;
    let grad_pf = grid.gradient(&state.p_f);
    let b = forcing.body.field(&grid, state.t);
    let mobility = darcy.k0 / (darcy.phi0 * darcy.mu_f);
    let mut v_f = state.v.clone();
    for a in 0..grid.dim {
        let d = grid.face_dims(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    if grid.is_wall_face(a, [i, j, k][a]) {
                        continue;
                    }
                    let idx = idx3(&d, i, j, k);
                    v_f.comp[a][idx] -=
                        mobility * (grad_pf.comp[a][idx] - darcy.rho_f * b.comp[a][idx]);
                }
            }
        }
    }
    v_f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::MaterialParams;
    use crate::grid::{ScalarField, StaggeredGrid, SymTensorField};
    use crate::solver::forcing::{BodyForce, PsSpec, SourceSpec};
    use crate::solver::state::StepBudget;

    fn state_with(grid: &StaggeredGrid, p_f: ScalarField) -> SimulationState {
        SimulationState {
            t: 0.0,
            step_index: 0,
            v: VectorField::zeros(grid),
            p: ScalarField::zeros(grid),
            p_f,
            z: SymTensorField::zeros(grid),
            div_residual_inf: 0.0,
            budget: StepBudget::default(),
        }
    }

    #[test]
    fn params_validate() {
        assert!(DarcyParams::new(0.05, 1.0, 1.0, 1.0).is_ok());
        assert_eq!(DarcyParams::new(1.2, 1.0, 1.0, 1.0).unwrap_err().field, "phi0");
        assert!(DarcyParams::new(0.05, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn hydrostatic_balance_kills_drift() {
        // grad p_f = rho_f b -> v_f = v.
        let g = StaggeredGrid::boxed(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let rho_f = 2.0;
        let b = [0.3, -0.1, 0.0];
        let p_f = ScalarField::from_fn(&g, |x, y, _| rho_f * (b[0] * x + b[1] * y));
        let state = state_with(&g, p_f);
        let darcy = DarcyParams {
            rho_f,
            ..DarcyParams::default()
        };
        let forcing = ForcingSpec {
            body: BodyForce::Constant(b),
            source: SourceSpec::Zero,
            p_s: PsSpec::Constant(0.0),
        };
        let v_f = darcy_velocity(&state, &darcy, &forcing);
        assert!(v_f.norm_inf() < 1e-12);
    }

    #[test]
    fn uniform_gradient_gives_darcy_drift() {
        let g = StaggeredGrid::boxed(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let grad = 0.7;
        let p_f = ScalarField::from_fn(&g, |x, _, _| grad * x);
        let state = state_with(&g, p_f);
        let darcy = DarcyParams {
            phi0: 0.1,
            mu_f: 2.0,
            k0: 0.04,
            rho_f: 1.0,
        };
        let expected = -darcy.k0 / (darcy.phi0 * darcy.mu_f) * grad;
        let forcing = ForcingSpec::quiescent();
        let v_f = darcy_velocity(&state, &darcy, &forcing);
        let d = g.face_dims(0);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 1..g.n[0] {
                    let got = v_f.comp[0][idx3(&d, i, j, k)];
                    assert!((got - expected).abs() < 1e-13);
                }
            }
        }

        // Doubling k0 doubles the drift exactly.
        let darcy2 = DarcyParams {
            k0: 2.0 * darcy.k0,
            ..darcy
        };
        let v_f2 = darcy_velocity(&state, &darcy2, &forcing);
        for j in 0..d[1] {
            for i in 1..g.n[0] {
                let a = v_f.comp[0][idx3(&d, i, j, 0)];
                let b = v_f2.comp[0][idx3(&d, i, j, 0)];
                assert!((b - 2.0 * a).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn material_params_unused_by_darcy() {
        // Post-process only: changing bulk constants does not touch v_f.
        let g = StaggeredGrid::boxed(2, &[4, 4], &[1.0, 1.0]).unwrap();
        let p_f = ScalarField::from_fn(&g, |x, _, _| x);
        let state = state_with(&g, p_f);
        let forcing = ForcingSpec::quiescent();
        let a = darcy_velocity(&state, &DarcyParams::default(), &forcing);
        let _params = MaterialParams::default();
        let b = darcy_velocity(&state, &DarcyParams::default(), &forcing);
        assert_eq!(a, b);
    }
}
