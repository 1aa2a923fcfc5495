use super::config::{SolverConfig, SolverError};
use super::forcing::ForcingSpec;
use super::momentum::{
    convection, dof_mask, dof_offsets, effective_viscosity, flatten, regularized_stress_field,
    unflatten, MomentumSystem,
};
use super::projection::project_detailed;
use super::state::{SimulationState, StepBudget};
use super::walls::{enforce_slip, WallSpec};
use crate::constitutive::MaterialParams;
use crate::grid::{cg, ScalarField, StaggeredGrid, VectorField};

/// Activated yield stress `q*(p_s - p_f)^+` per cell.
pub fn yield_stress_cells(
    grid: &StaggeredGrid,
    p_s: &ScalarField,
    p_f: &ScalarField,
    q_star: f64,
) -> Vec<f64> {
    let mut tau = vec![0.0; grid.cells()];
    for i in 0..tau.len() {
        tau[i] = q_star * (p_s.data[i] - p_f.data[i]).max(0.0);
    }
    tau
}

/// Builds a state from initial data: the velocity is wall-constrained and
/// projected once to obtain the initial pressure.
pub fn initial_state(
    mut v0: VectorField,
    p_f0: ScalarField,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    cfg: &SolverConfig,
) -> Result<SimulationState, SolverError> {
    let grid = v0.grid;
    v0.constrain_wall_normals();
    let proj = project_detailed(&v0, params.rho_star, cfg.dt_initial, cfg.projection_tol)?;
    let p_s = forcing.p_s.field(&grid, 0.0);
    let tau = yield_stress_cells(&grid, &p_s, &p_f0, params.q_star);
    let d = grid.sym_gradient(&proj.v);
    let z = regularized_stress_field(&grid, &d, &tau, params);
    let div_residual_inf = grid.divergence(&proj.v).norm_inf();
    let mut state = SimulationState {
        t: 0.0,
        step_index: 0,
        v: proj.v,
        p: proj.q,
        p_f: p_f0,
        z,
        div_residual_inf,
        budget: StepBudget::default(),
    };
    state.budget.kinetic_new = state.kinetic_energy(params.rho_star);
    if !state.is_finite() {
        return Err(SolverError::NonFinite("initial state"));
    }
    Ok(state)
}

/// Step size from the base step and the advective CFL target (the viscous
/// and diffusive terms are implicit and impose no limit).
pub fn choose_dt(state: &SimulationState, cfg: &SolverConfig) -> f64 {
    let grid = state.v.grid;
    let max_abs = state.v.max_abs();
    let rate: f64 = (0..grid.dim).map(|a| max_abs[a] / grid.h[a]).sum();
    if rate <= 0.0 {
        cfg.dt_initial
    } else {
        cfg.dt_initial.min(cfg.cfl_target / rate)
    }
}

/// Momentum predictor: solves the semi-implicit momentum step (stress form
/// implicit with the plug viscosity lagged to `state.v`, convection and
/// body force explicit) without the new-time pressure.
pub fn momentum_predictor(
    state: &SimulationState,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    cfg: &SolverConfig,
    walls: &WallSpec,
    dt: f64,
) -> Result<VectorField, SolverError> {
    let sweep = momentum_sweep(state, &state.v, forcing, params, cfg, walls, dt)?;
    Ok(sweep.v_star)
}

struct SweepOutcome {
    v_star: VectorField,
    flat_star: Vec<f64>,
    viscous_work: f64,
    plastic_work: f64,
    robin_work: f64,
    convection_work: f64,
    body_work: f64,
    momentum_residual_dot: f64,
}

fn momentum_sweep(
    state: &SimulationState,
    v_iter: &VectorField,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    cfg: &SolverConfig,
    walls: &WallSpec,
    dt: f64,
) -> Result<SweepOutcome, SolverError> {
    let grid = state.v.grid;
    let t_new = state.t + dt;
    let vol = grid.cell_volume();

    let p_s = forcing.p_s.field(&grid, t_new);
    let tau = yield_stress_cells(&grid, &p_s, &state.p_f, params.q_star);
    let d_prev = grid.sym_gradient(v_iter);
    let mu = effective_viscosity(&grid, &d_prev, &tau, params);
    let robin = enforce_slip(v_iter, &tau, params, walls);
    let sys = MomentumSystem::new(grid, mu, &robin, walls, params.rho_star, dt);

    let conv = convection(&grid, &state.v, cfg.convection_truncation_n);
    let body = forcing.body.field(&grid, t_new);

    let offsets = sys.offsets;
    let v_n_flat = flatten(&state.v, &offsets);
    let conv_flat = flatten(&conv, &offsets);
    let body_flat = flatten(&body, &offsets);

    let mut rhs = vec![0.0; sys.ndof()];
    let rho_vol = params.rho_star * vol;
    for i in 0..rhs.len() {
        rhs[i] = sys.mass * v_n_flat[i] + rho_vol * (body_flat[i] - conv_flat[i]);
    }
    sys.affine_rhs_into(&mut rhs);
    for (i, m) in sys.mask.iter().enumerate() {
        if *m {
            rhs[i] = 0.0;
        }
    }

    let diag = sys.diagonal();
    let mut x = flatten(v_iter, &offsets);
    for (i, m) in sys.mask.iter().enumerate() {
        if *m {
            x[i] = 0.0;
        }
    }
    let out = cg(
        |v, o| sys.apply(v, o),
        &rhs,
        &mut x,
        1e-12,
        4 * sys.ndof() + 200,
        Some(&diag),
    );
    if !out.converged {
        return Err(SolverError::Linear {
            what: "momentum",
            iters: out.iters,
            residual: out.rel_residual,
        });
    }

    // Exact budget terms of this sweep, paired with v*.
    let (viscous_work, plastic_work) = sys.form_work(&x);
    let v_star = unflatten(&grid, &x, &offsets);
    let robin_work = robin.robin_work(&v_star);
    let mut convection_work = 0.0;
    let mut body_work = 0.0;
    for i in 0..x.len() {
        convection_work += conv_flat[i] * x[i];
        body_work += body_flat[i] * x[i];
    }
    convection_work *= rho_vol;
    body_work *= rho_vol;

    let mut ax = vec![0.0; x.len()];
    sys.apply(&x, &mut ax);
    let mut momentum_residual_dot = 0.0;
    for i in 0..x.len() {
        momentum_residual_dot += (rhs[i] - ax[i]) * x[i];
    }

    Ok(SweepOutcome {
        v_star,
        flat_star: x,
        viscous_work,
        plastic_work,
        robin_work,
        convection_work,
        body_work,
        momentum_residual_dot,
    })
}

/// Pore-pressure transport: upwind advection by `v`, implicit diffusion,
/// with source `g + v . grad p_s`.
pub fn pore_pressure_step(
    state: &SimulationState,
    v: &VectorField,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    dt: f64,
) -> Result<ScalarField, SolverError> {
    let grid = state.v.grid;
    let t_new = state.t + dt;
    let mut src = forcing.source.field(&grid, t_new);
    if !forcing.p_s.has_zero_gradient() {
        let p_s = forcing.p_s.field(&grid, t_new);
        let grad = grid.gradient(&p_s);
        for k in 0..grid.n[2] {
            for j in 0..grid.n[1] {
                for i in 0..grid.n[0] {
                    let c = grid.cell_index(i, j, k);
                    let vc = v.at_cell_center(i, j, k);
                    let gc = grad.at_cell_center(i, j, k);
                    let mut dot = 0.0;
                    for a in 0..grid.dim {
                        dot += vc[a] * gc[a];
                    }
                    src.data[c] += dot;
                }
            }
        }
    }
    grid.advect_diffuse_step(&state.p_f, v, params.k_pore, &src, dt)
        .map_err(SolverError::from)
}

/// Advances one step: Picard sweeps of predictor + projection with lagged
/// plug viscosity and wall coefficients, then the pore-pressure transport
/// with the end-of-step velocity, then the cached-stress refresh.
pub fn step(
    state: &SimulationState,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    cfg: &SolverConfig,
    walls: &WallSpec,
) -> Result<SimulationState, SolverError> {
    let dt = choose_dt(state, cfg);
    step_with_dt(state, forcing, params, cfg, walls, dt)
}

pub fn step_with_dt(
    state: &SimulationState,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    cfg: &SolverConfig,
    walls: &WallSpec,
    dt: f64,
) -> Result<SimulationState, SolverError> {
    let grid = state.v.grid;
    let vol = grid.cell_volume();
    let offsets = dof_offsets(&grid);
    let mask = dof_mask(&grid);

    let mut v_iter = state.v.clone();
    let mut last: Option<(SweepOutcome, super::projection::ProjectionOutcome)> = None;
    let mut sweeps = 0;
    for _ in 0..cfg.picard_iters {
        let sweep = momentum_sweep(state, &v_iter, forcing, params, cfg, walls, dt)?;
        let proj = project_detailed(&sweep.v_star, params.rho_star, dt, cfg.projection_tol)?;
        sweeps += 1;
        let mut delta = 0.0f64;
        for a in 0..grid.dim {
            for i in 0..proj.v.comp[a].len() {
                delta = delta.max((proj.v.comp[a][i] - v_iter.comp[a][i]).abs());
            }
        }
        v_iter = proj.v.clone();
        let scale = proj.v.norm_inf().max(1.0);
        let converged = delta <= cfg.picard_tol * scale;
        last = Some((sweep, proj));
        if converged {
            break;
        }
    }
    let (sweep, proj) = last.expect("picard_iters >= 1");
    let v_new = proj.v;

    // Energy ledger of the final sweep (see StepBudget).
    let rho = params.rho_star;
    let e_old = 0.5 * rho * state.v.dot_vol(&state.v);
    let e_new = 0.5 * rho * v_new.dot_vol(&v_new);
    let v_n_flat = flatten(&state.v, &offsets);
    let mut diff2 = 0.0;
    for i in 0..v_n_flat.len() {
        let d = sweep.flat_star[i] - v_n_flat[i];
        diff2 += d * d;
    }
    let numerical_dissipation = 0.5 * rho * vol * diff2;
    let grad_q_flat = flatten(&proj.grad_q, &offsets);
    let mut gq2 = 0.0;
    for (i, g) in grad_q_flat.iter().enumerate() {
        if !mask[i] {
            gq2 += g * g;
        }
    }
    let projection_dissipation = 0.5 * dt * dt / rho * vol * gq2;
    let energy_residual = e_new - e_old
        + numerical_dissipation
        + projection_dissipation
        + dt * (sweep.convection_work + sweep.viscous_work + sweep.plastic_work + sweep.robin_work
            - sweep.body_work);
    // The identity defect is exactly the paired linear-solver residuals.
    let explained =
        -dt * sweep.momentum_residual_dot - dt * dt / rho * vol * proj.residual_dot_q;
    debug_assert!(
        (energy_residual - explained).abs() <= 1e-10 * e_old.max(e_new).max(1e-9),
        "energy ledger out of balance: {energy_residual} vs {explained}"
    );

    let budget = StepBudget {
        dt,
        kinetic_old: e_old,
        kinetic_new: e_new,
        numerical_dissipation,
        projection_dissipation,
        convection_work: sweep.convection_work,
        viscous_work: sweep.viscous_work,
        plastic_work: sweep.plastic_work,
        robin_work: sweep.robin_work,
        body_work: sweep.body_work,
        energy_residual,
        picard_sweeps: sweeps,
    };

    // Pore pressure with the end-of-step velocity, then the stress cache.
    let p_f_new = pore_pressure_step(state, &v_new, forcing, params, dt)?;
    let t_new = state.t + dt;
    let p_s = forcing.p_s.field(&grid, t_new);
    let tau = yield_stress_cells(&grid, &p_s, &p_f_new, params.q_star);
    let d_new = grid.sym_gradient(&v_new);
    let z = regularized_stress_field(&grid, &d_new, &tau, params);

    let div_residual_inf = grid.divergence(&v_new).norm_inf();
    if div_residual_inf > cfg.projection_tol {
        return Err(SolverError::DivergenceResidual {
            got: div_residual_inf,
            bound: cfg.projection_tol,
        });
    }
    let new_state = SimulationState {
        t: t_new,
        step_index: state.step_index + 1,
        v: v_new,
        p: proj.q,
        p_f: p_f_new,
        z,
        div_residual_inf,
        budget,
    };
    if !new_state.is_finite() {
        return Err(SolverError::NonFinite("post-step state"));
    }
    debug_assert!(new_state.p.mean().abs() <= 1e-12 * new_state.p.norm_inf().max(1.0));
    Ok(new_state)
}
