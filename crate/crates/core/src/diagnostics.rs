//! Per-step measurement of every checkable inequality the model provides:
//! energy budget, pointwise constitutive constraint residuals in the bulk
//! and on the walls, pore-pressure extrema, divergence residuals, and plug
//! region extraction.

use crate::constitutive::{
    check_scalar_constraints, check_slip_constraints, regularized_slip_traction, MaterialParams,
};
use crate::grid::{idx3, ScalarField, PAIRS};
use crate::solver::{
    cell_norms, enforce_slip, for_each_stick_slip_site, tangential_vector, yield_stress_cells,
    ForcingSpec, SimulationState, WallSpec,
};

/// One diagnostics row. Dissipation entries are evaluated from the
/// end-of-step state with the solver's quadrature and are individually
/// non-negative; `energy_residual` is the exact ledger defect recorded by
/// the stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub t: f64,
    pub kinetic_energy: f64,
    pub viscous_dissipation: f64,
    pub plastic_dissipation: f64,
    pub wall_dissipation: f64,
    pub energy_residual: f64,
    pub div_residual_inf: f64,
    pub pf_min: f64,
    pub pf_max: f64,
    pub max_r1_bulk: f64,
    pub max_r2_bulk: f64,
    pub max_r1_wall: f64,
    pub max_r2_wall: f64,
    pub plug_fraction: f64,
}

impl StepReport {
    pub const FIELD_NAMES: [&'static str; 14] = [
        "t",
        "kinetic_energy",
        "viscous_dissipation",
        "plastic_dissipation",
        "wall_dissipation",
        "energy_residual",
        "div_residual_inf",
        "pf_min",
        "pf_max",
        "max_r1_bulk",
        "max_r2_bulk",
        "max_r1_wall",
        "max_r2_wall",
        "plug_fraction",
    ];

    pub fn values(&self) -> [f64; 14] {
        [
            self.t,
            self.kinetic_energy,
            self.viscous_dissipation,
            self.plastic_dissipation,
            self.wall_dissipation,
            self.energy_residual,
            self.div_residual_inf,
            self.pf_min,
            self.pf_max,
            self.max_r1_bulk,
            self.max_r2_bulk,
            self.max_r1_wall,
            self.max_r2_wall,
            self.plug_fraction,
        ]
    }
}

/// Constraint residual fields and their maxima.
#[derive(Debug, Clone)]
pub struct ConstraintResiduals {
    pub r1_bulk: ScalarField,
    pub r2_bulk: ScalarField,
    pub wall_r1: Vec<f64>,
    pub wall_r2: Vec<f64>,
    pub max_r1_bulk: f64,
    pub max_r2_bulk: f64,
    pub max_r1_wall: f64,
    pub max_r2_wall: f64,
}

/// Assembles the full report for the step `prev -> next`.
pub fn energy_budget(
    prev: &SimulationState,
    next: &SimulationState,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    walls: &WallSpec,
    plug_threshold: Option<f64>,
) -> StepReport {
    debug_assert!(next.step_index == prev.step_index + 1);
    let grid = next.v.grid;
    let budget = &next.budget;

    let d = grid.sym_gradient(&next.v);
    let vol = grid.cell_volume();

    // Viscous and plastic dissipation with the solver's site weights:
    // cells in full, interior off-diagonal sites doubled for the Frobenius
    // pairing, boundary off-diagonal sites omitted.
    let mut visc = 0.0;
    let mut plast = 0.0;
    for a in 0..grid.dim {
        for (i, x) in d.diag[a].iter().enumerate() {
            visc += x * x * vol;
            plast += next.z.diag[a][i] * x * vol;
        }
    }
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        if b >= grid.dim {
            continue;
        }
        let od = grid.off_dims(a, b);
        for k in 0..od[2] {
            for j in 0..od[1] {
                for i in 0..od[0] {
                    let s = [i, j, k];
                    let bnd = (!grid.periodic[a] && (s[a] == 0 || s[a] == grid.n[a]))
                        || (!grid.periodic[b] && (s[b] == 0 || s[b] == grid.n[b]));
                    if bnd {
                        continue;
                    }
                    let idx = idx3(&od, i, j, k);
                    let x = d.off[p][idx];
                    visc += 2.0 * x * x * vol;
                    plast += 2.0 * next.z.off[p][idx] * x * vol;
                }
            }
        }
    }
    visc *= 2.0 * params.nu_star;

    // Wall dissipation of the stick-slip law at the end-of-step velocity.
    let p_s = forcing.p_s.field(&grid, next.t);
    let tau = yield_stress_cells(&grid, &p_s, &next.p_f, params.q_star);
    let coeffs = enforce_slip(&next.v, &tau, params, walls);
    let wall = coeffs.robin_work(&next.v);

    let residuals = constraint_residual_fields(next, forcing, params, walls);
    let threshold = plug_threshold.unwrap_or_else(|| default_plug_threshold(next, params));
    let (_, plug_fraction) = plug_region(next, threshold);

    StepReport {
        t: next.t,
        kinetic_energy: budget.kinetic_new,
        viscous_dissipation: visc,
        plastic_dissipation: plast,
        wall_dissipation: wall,
        energy_residual: budget.energy_residual,
        div_residual_inf: next.div_residual_inf,
        pf_min: next.p_f.min(),
        pf_max: next.p_f.max(),
        max_r1_bulk: residuals.max_r1_bulk,
        max_r2_bulk: residuals.max_r2_bulk,
        max_r1_wall: residuals.max_r1_wall,
        max_r2_wall: residuals.max_r2_wall,
        plug_fraction,
    }
}

/// Evaluates the two scalar constitutive constraints on the cell-gathered
/// `(S, D)` pair and the two slip constraints on every stick-slip wall
/// site. With the regularized closure, `r1 <= 0` everywhere and
/// `r2 <= tau min(|D|, eps)` pointwise.
pub fn constraint_residual_fields(
    state: &SimulationState,
    forcing: &ForcingSpec,
    params: &MaterialParams,
    walls: &WallSpec,
) -> ConstraintResiduals {
    let grid = state.v.grid;
    let d = grid.sym_gradient(&state.v);
    let p_s = forcing.p_s.field(&grid, state.t);
    let tau = yield_stress_cells(&grid, &p_s, &state.p_f, params.q_star);

    let mut r1_bulk = ScalarField::zeros(&grid);
    let mut r2_bulk = ScalarField::zeros(&grid);
    let mut max_r1 = f64::NEG_INFINITY;
    let mut max_r2 = f64::NEG_INFINITY;
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                let c = grid.cell_index(i, j, k);
                let dc = d.at_cell_center(i, j, k);
                let z = dc * (tau[c] / (dc.norm() + params.epsilon));
                let s = dc * (2.0 * params.nu_star) + z;
                let (_, r) = check_scalar_constraints(&s, &dc, tau[c], params.nu_star, 0.0);
                r1_bulk.data[c] = r[0];
                r2_bulk.data[c] = r[1];
                max_r1 = max_r1.max(r[0]);
                max_r2 = max_r2.max(r[1]);
            }
        }
    }

    // Wall checks on each stick-slip site, evaluated at the wall velocity
    // recovered through the half-cell composite closure.
    let mut wall_r1 = Vec::new();
    let mut wall_r2 = Vec::new();
    let coeffs = enforce_slip(&state.v, &tau, params, walls);
    for_each_stick_slip_site(&grid, walls, |w, side, t, site, _fidx, _area| {
        let near = tangential_vector(&grid, &state.v, w, t, site);
        let ratio = coeffs.ratio_at(w, side, t, site);
        let v_tau = [ratio * near[0], ratio * near[1], ratio * near[2]];
        let z = regularized_slip_traction(&v_tau, params.s_star, params.epsilon);
        let s = [
            z[0] + params.gamma_star * v_tau[0],
            z[1] + params.gamma_star * v_tau[1],
            z[2] + params.gamma_star * v_tau[2],
        ];
        let (_, r) = check_slip_constraints(&s, &v_tau, params.s_star, params.gamma_star, 0.0);
        wall_r1.push(r[0]);
        wall_r2.push(r[1]);
    });
    let (max_r1_wall, max_r2_wall) = if wall_r1.is_empty() {
        // No stick-slip walls: the trivial stick-state residuals.
        (-params.s_star, 0.0)
    } else {
        (
            wall_r1.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            wall_r2.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    };

    ConstraintResiduals {
        r1_bulk,
        r2_bulk,
        wall_r1,
        wall_r2,
        max_r1_bulk: max_r1,
        max_r2_bulk: max_r2,
        max_r1_wall,
        max_r2_wall,
    }
}

/// Cells whose strain-rate magnitude is at or below `threshold`, and the
/// fraction of the domain they cover.
pub fn plug_region(state: &SimulationState, threshold: f64) -> (Vec<bool>, f64) {
    let norms = strain_rate_cells(state);
    let mask: Vec<bool> = norms.iter().map(|&n| n <= threshold).collect();
    let count = mask.iter().filter(|&&m| m).count();
    let fraction = count as f64 / mask.len() as f64;
    (mask, fraction)
}

/// Relative plug threshold: ten times the regularization scale times the
/// current peak strain rate. Separates the creep floor from the flowing
/// regions of a state that contains yielded zones (at rest everything is
/// flagged). For fully-creeping states the threshold must be calibrated
/// externally against a below-yield run (scenario presets pin such a
/// value when the run starts below yield).
pub fn default_plug_threshold(state: &SimulationState, params: &MaterialParams) -> f64 {
    let norms = strain_rate_cells(state);
    let d_max = norms.iter().cloned().fold(0.0f64, f64::max);
    10.0 * params.epsilon * d_max
}

/// Strain-rate magnitude per cell (full tensor gathered).
pub fn strain_rate_cells(state: &SimulationState) -> Vec<f64> {
    let grid = state.v.grid;
    let d = grid.sym_gradient(&state.v);
    cell_norms(&grid, &d)
}

/// |Z| gathered per cell from the cached stress.
pub fn extra_stress_cells(state: &SimulationState) -> Vec<f64> {
    let grid = state.v.grid;
    let mut out = vec![0.0; grid.cells()];
    for k in 0..grid.n[2] {
        for j in 0..grid.n[1] {
            for i in 0..grid.n[0] {
                out[grid.cell_index(i, j, k)] = state.z.at_cell_center(i, j, k).norm();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{StaggeredGrid, VectorField};
    use crate::solver::{initial_state, step, BodyForce, PsSpec, SolverConfig, SourceSpec};

    fn rest_state(grid: &StaggeredGrid) -> SimulationState {
        initial_state(
            VectorField::zeros(grid),
            ScalarField::zeros(grid),
            &ForcingSpec::quiescent(),
            &MaterialParams::default(),
            &SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn rest_report_is_all_zero() {
        let grid = StaggeredGrid::boxed(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let state = rest_state(&grid);
        let params = MaterialParams::default();
        let walls = WallSpec::stick_slip();
        let forcing = ForcingSpec::quiescent();
        let next = step(&state, &forcing, &params, &SolverConfig::default(), &walls).unwrap();
        let rep = energy_budget(&state, &next, &forcing, &params, &walls, None);
        assert_eq!(rep.kinetic_energy, 0.0);
        assert_eq!(rep.viscous_dissipation, 0.0);
        assert_eq!(rep.plastic_dissipation, 0.0);
        assert_eq!(rep.wall_dissipation, 0.0);
        assert_eq!(rep.energy_residual, 0.0);
        assert_eq!(rep.plug_fraction, 1.0);
        assert!(rep.max_r1_bulk <= 0.0);
        assert!(rep.max_r2_bulk <= 1e-15);
    }

    #[test]
    fn newtonian_run_has_zero_plastic_dissipation() {
        let grid = StaggeredGrid::boxed(2, &[12, 12], &[1.0, 1.0]).unwrap();
        let params = MaterialParams {
            q_star: 0.0,
            ..MaterialParams::default()
        };
        let cfg = SolverConfig::default();
        let walls = WallSpec::stick_slip();
        let forcing = ForcingSpec {
            body: BodyForce::TransverseShear {
                comp: 0,
                across: 1,
                amp: 1.0,
            },
            source: SourceSpec::Zero,
            p_s: PsSpec::Constant(2.0),
        };
        let state = initial_state(
            VectorField::zeros(&grid),
            ScalarField::zeros(&grid),
            &forcing,
            &params,
            &cfg,
        )
        .unwrap();
        let mut cur = state;
        for _ in 0..5 {
            let next = step(&cur, &forcing, &params, &cfg, &walls).unwrap();
            let rep = energy_budget(&cur, &next, &forcing, &params, &walls, None);
            assert_eq!(rep.plastic_dissipation, 0.0);
            assert!(rep.max_r1_bulk <= 1e-15);
            assert!(rep.max_r2_bulk <= 1e-15);
            assert!(rep.viscous_dissipation > 0.0);
            assert!(rep.wall_dissipation > 0.0);
            cur = next;
        }
    }

    #[test]
    fn mismatched_pair_is_detected() {
        use crate::constitutive::SymTensor;
        let d = SymTensor::sym2(1.0, -1.0, 0.2);
        let (ok, r) = check_scalar_constraints(&SymTensor::ZERO, &d, 1.0, 0.5, 1e-10);
        assert!(!ok);
        assert!(r[1] > 0.0);
    }

    #[test]
    fn regularized_run_satisfies_residual_bounds() {
        // Forced run with tau > 0: r1 <= 0 and r2 <= tau min(|D|, eps)
        // cellwise.
        let grid = StaggeredGrid::boxed(2, &[12, 12], &[1.0, 1.0]).unwrap();
        let params = MaterialParams {
            epsilon: 1e-2,
            ..MaterialParams::default()
        };
        let cfg = SolverConfig {
            dt_initial: 2e-3,
            picard_iters: 3,
            ..SolverConfig::default()
        };
        let walls = WallSpec::stick_slip();
        let forcing = ForcingSpec {
            body: BodyForce::TransverseShear {
                comp: 0,
                across: 1,
                amp: 2.0,
            },
            source: SourceSpec::Zero,
            p_s: PsSpec::Constant(0.5),
        };
        let mut state = initial_state(
            VectorField::zeros(&grid),
            ScalarField::zeros(&grid),
            &forcing,
            &params,
            &cfg,
        )
        .unwrap();
        for _ in 0..10 {
            state = step(&state, &forcing, &params, &cfg, &walls).unwrap();
        }
        let res = constraint_residual_fields(&state, &forcing, &params, &walls);
        assert!(res.max_r1_bulk <= 1e-12, "r1 {}", res.max_r1_bulk);
        let p_s = forcing.p_s.field(&grid, state.t);
        let tau = yield_stress_cells(&grid, &p_s, &state.p_f, params.q_star);
        let d = grid.sym_gradient(&state.v);
        for k in 0..grid.n[2] {
            for j in 0..grid.n[1] {
                for i in 0..grid.n[0] {
                    let c = grid.cell_index(i, j, k);
                    let dn = d.at_cell_center(i, j, k).norm();
                    let bound = tau[c] * dn.min(params.epsilon) + 1e-12;
                    assert!(
                        res.r2_bulk.data[c] <= bound,
                        "r2 {} vs bound {bound}",
                        res.r2_bulk.data[c]
                    );
                }
            }
        }
        assert!(res.max_r1_wall <= 1e-12);
        assert!(res.max_r2_wall <= params.s_star * params.epsilon + 1e-12);
    }

    #[test]
    fn plug_region_full_at_rest() {
        let grid = StaggeredGrid::boxed(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let state = rest_state(&grid);
        let thr = default_plug_threshold(&state, &MaterialParams::default());
        let (mask, fraction) = plug_region(&state, thr);
        assert_eq!(fraction, 1.0);
        assert!(mask.iter().all(|&m| m));
    }
}
