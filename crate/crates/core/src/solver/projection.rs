use super::config::SolverError;
use crate::grid::{cg, ScalarField, VectorField};

/// Detailed projection result, including the terms the energy ledger needs.
pub struct ProjectionOutcome {
    pub v: VectorField,
    pub q: ScalarField,
    pub grad_q: VectorField,
    /// Residual-solution pairing `<r_p, q>` of the Poisson solve.
    pub residual_dot_q: f64,
    pub iters: usize,
}

/// Removes the divergence of `v_star` through a Neumann-Poisson solve:
/// `-lap q = -(rho/dt) div v_star`, then `v = v_star - (dt/rho) grad q`.
/// The post-state divergence max-norm is guaranteed `<= tol`.
pub fn project(
    v_star: &VectorField,
    rho_star: f64,
    dt: f64,
    tol: f64,
) -> Result<(VectorField, ScalarField), SolverError> {
    project_detailed(v_star, rho_star, dt, tol).map(|o| (o.v, o.q))
}

pub fn project_detailed(
    v_star: &VectorField,
    rho_star: f64,
    dt: f64,
    tol: f64,
) -> Result<ProjectionOutcome, SolverError> {
    let grid = v_star.grid;
    let wall_res = v_star.wall_normal_residual();
    if wall_res > 1e-12 * v_star.norm_inf().max(1.0) {
        return Err(SolverError::Config(format!(
            "projection input not wall-constrained (normal residual {wall_res:.3e})"
        )));
    }
    let mut v_star = v_star.clone();
    v_star.constrain_wall_normals();
    let v_star = &v_star;
    let div = grid.divergence(v_star);
    let div_l2: f64 = div.data.iter().map(|x| x * x).sum::<f64>().sqrt();

    if div_l2 == 0.0 {
        return Ok(ProjectionOutcome {
            v: v_star.clone(),
            q: ScalarField::zeros(&grid),
            grad_q: VectorField::zeros(&grid),
            residual_dot_q: 0.0,
            iters: 0,
        });
    }

    // After projection the cellwise divergence equals (dt/rho) times the
    // Poisson residual, so the CG tolerance is set from the requested
    // divergence bound (relative to ||f|| = (rho/dt)||div v*||).
    let scale = rho_star / dt;
    let mut rhs = ScalarField::zeros(&grid);
    for i in 0..rhs.data.len() {
        rhs.data[i] = -scale * div.data[i];
    }
    let cg_tol = (0.05 * tol / div_l2).min(1e-12).max(1e-15);
    let mean = rhs.mean();
    let b: Vec<f64> = rhs.data.iter().map(|x| x - mean).collect();
    let mut x = vec![0.0; b.len()];
    let out = cg(
        |v, o| grid.neg_laplacian_apply(v, o),
        &b,
        &mut x,
        cg_tol,
        8 * grid.cells() + 200,
        None,
    );
    if !out.converged {
        return Err(SolverError::Linear {
            what: "pressure Poisson",
            iters: out.iters,
            residual: out.rel_residual,
        });
    }
    let mut q = ScalarField { grid, data: x };
    let drift = q.mean();
    q.shift(-drift);

    // Pairing of the final Poisson residual with q, for the energy ledger.
    let mut aq = vec![0.0; q.data.len()];
    grid.neg_laplacian_apply(&q.data, &mut aq);
    let mut residual_dot_q = 0.0;
    for i in 0..aq.len() {
        residual_dot_q += (b[i] - aq[i]) * q.data[i];
    }

    let grad_q = grid.gradient(&q);
    let mut v = v_star.clone();
    let coeff = dt / rho_star;
    for a in 0..grid.dim {
        for i in 0..v.comp[a].len() {
            v.comp[a][i] -= coeff * grad_q.comp[a][i];
        }
    }
    let div_after = grid.divergence(&v).norm_inf();
    if div_after > tol {
        return Err(SolverError::DivergenceResidual {
            got: div_after,
            bound: tol,
        });
    }
    Ok(ProjectionOutcome {
        v,
        q,
        grad_q,
        residual_dot_q,
        iters: out.iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StaggeredGrid;
    use crate::util::Rng;

    #[test]
    fn divergence_free_input_is_untouched() {
        // Discrete curl of a stream function: exactly divergence-free.
        let g = StaggeredGrid::boxed(2, &[12, 12], &[1.0, 1.0]).unwrap();
        let psi = |x: f64, y: f64| {
            ((std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()).powi(2)
        };
        let mut v = VectorField::zeros(&g);
        let d0 = g.face_dims(0);
        for j in 0..g.n[1] {
            for i in 0..d0[0] {
                let x = i as f64 * g.h[0];
                *v.at_mut(0, i, j, 0) =
                    (psi(x, (j + 1) as f64 * g.h[1]) - psi(x, j as f64 * g.h[1])) / g.h[1];
            }
        }
        let d1 = g.face_dims(1);
        for j in 0..d1[1] {
            for i in 0..g.n[0] {
                let y = j as f64 * g.h[1];
                *v.at_mut(1, i, j, 0) =
                    -(psi((i + 1) as f64 * g.h[0], y) - psi(i as f64 * g.h[0], y)) / g.h[0];
            }
        }
        let (v2, q) = project(&v, 1.0, 0.01, 1e-10).unwrap();
        assert!(q.norm_inf() < 1e-10);
        for a in 0..2 {
            for i in 0..v.comp[a].len() {
                assert!((v.comp[a][i] - v2.comp[a][i]).abs() < 1e-10);
            }
        }
    }

    // Helmholtz-decomposition oracle: projecting a pure gradient recovers
    // the potential exactly (it is a discrete identity, not an asymptotic
    // statement).
    #[test]
    fn gradient_input_recovers_potential() {
        let g = StaggeredGrid::boxed(2, &[16, 12], &[1.0, 0.7]).unwrap();
        let mut psi = ScalarField::from_fn(&g, |x, y, _| (2.0 * x).cos() + 0.3 * (3.0 * y).sin());
        let m = psi.mean();
        psi.shift(-m);
        let v_star = g.gradient(&psi);
        let (rho, dt) = (2.0, 0.05);
        let (v, q) = project(&v_star, rho, dt, 1e-10).unwrap();
        assert!(v.norm_inf() < 1e-8, "residual velocity {}", v.norm_inf());
        for i in 0..q.data.len() {
            assert!(
                (q.data[i] - rho / dt * psi.data[i]).abs() < 1e-8 * (rho / dt),
                "potential mismatch at {i}"
            );
        }
    }

    #[test]
    fn any_input_becomes_divergence_free() {
        let mut rng = Rng::new(2718);
        for periodic in [[false, false], [true, false]] {
            let g = StaggeredGrid::new(2, &[10, 8], &[1.0, 1.0], &[0.0; 2], &periodic).unwrap();
            let mut v = VectorField::zeros(&g);
            for a in 0..2 {
                for x in v.comp[a].iter_mut() {
                    *x = rng.range(-1.0, 1.0);
                }
            }
            v.constrain_wall_normals();
            let (v2, _) = project(&v, 1.0, 0.02, 1e-10).unwrap();
            assert!(g.divergence(&v2).norm_inf() <= 1e-10);
            assert_eq!(v2.wall_normal_residual(), 0.0);
        }
    }

    #[test]
    fn unconstrained_input_is_rejected() {
        let g = StaggeredGrid::boxed(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let mut v = VectorField::zeros(&g);
        for x in v.comp[0].iter_mut() {
            *x = 1.0;
        }
        assert!(project(&v, 1.0, 0.01, 1e-10).is_err());
    }
}
