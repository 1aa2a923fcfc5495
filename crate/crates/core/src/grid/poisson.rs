use super::fields::ScalarField;
use super::{GridError, StaggeredGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iters: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients on a symmetric positive (semi)definite operator.
///
/// Iteration order and reductions are fixed, so results are bit-reproducible.
/// Stops when `||r||_2 <= tol_rel * ||b||_2`.
pub fn cg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol_rel: f64,
    max_iter: usize,
    diag_precond: Option<&[f64]>,
) -> CgOutcome {
    let n = b.len();
    let norm_b = dot(b, b).sqrt();
    if norm_b == 0.0 {
        x.fill(0.0);
        return CgOutcome {
            iters: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }
    let tol_abs = tol_rel * norm_b;

    let mut r = vec![0.0; n];
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    for i in 0..n {
        r[i] = b[i] - ax[i];
    }
    let mut z = vec![0.0; n];
    let precond = |r: &[f64], z: &mut [f64]| match diag_precond {
        Some(d) => {
            for i in 0..r.len() {
                z[i] = r[i] / d[i];
            }
        }
        None => z.copy_from_slice(r),
    };
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        let res = dot(&r, &r).sqrt();
        if res <= tol_abs {
            return CgOutcome {
                iters: it,
                rel_residual: res / norm_b,
                converged: true,
            };
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Operator lost definiteness along p (round-off in the
            // semidefinite case); bail out with the current iterate.
            return CgOutcome {
                iters: it,
                rel_residual: res / norm_b,
                converged: res <= tol_abs,
            };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt();
    CgOutcome {
        iters: max_iter,
        rel_residual: res / norm_b,
        converged: res <= tol_abs,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct PoissonSolve {
    pub p: ScalarField,
    /// Mean subtracted from the right-hand side to meet the Neumann
    /// compatibility condition.
    pub mean_removed: f64,
    pub iters: usize,
    pub rel_residual: f64,
}

impl StaggeredGrid {
    /// Solves `-lap_N p = rhs` with the homogeneous Neumann (or periodic)
    /// closure, returning the zero-mean solution.
    ///
    /// The right-hand side must have (near-)zero mean; any mean present is
    /// projected out and reported.
    pub fn neumann_laplacian_solve(
        &self,
        rhs: &ScalarField,
        tol: f64,
        max_iter: usize,
    ) -> Result<PoissonSolve, GridError> {
        rhs.check_same_grid(self)?;
        let mean = rhs.mean();
        let b: Vec<f64> = rhs.data.iter().map(|x| x - mean).collect();
        let mut x = vec![0.0; b.len()];
        let out = cg(
            |v, out| self.neg_laplacian_apply(v, out),
            &b,
            &mut x,
            tol,
            max_iter,
            None,
        );
        if !out.converged {
            return Err(GridError::NonConvergence {
                iters: out.iters,
                residual: out.rel_residual,
            });
        }
        let mut p = ScalarField {
            grid: *self,
            data: x,
        };
        let drift = p.mean();
        p.shift(-drift);
        Ok(PoissonSolve {
            p,
            mean_removed: mean,
            iters: out.iters,
            rel_residual: out.rel_residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::Rng;
    use std::f64::consts::PI;

    #[test]
    fn zero_rhs_gives_zero() {
        let g = StaggeredGrid::boxed(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let rhs = ScalarField::zeros(&g);
        let sol = g.neumann_laplacian_solve(&rhs, 1e-12, 1000).unwrap();
        assert_eq!(sol.p.norm_inf(), 0.0);
        assert_eq!(sol.mean_removed, 0.0);
    }

    // rhs = cos(pi x / L) is a discrete-friendly Neumann eigenfunction;
    // the solution converges to (L/pi)^2 cos(pi x / L) at second order.
    #[test]
    fn cosine_eigenfunction_oracle() {
        let length = 1.0;
        let mut errors = Vec::new();
        for nc in [16usize, 32, 64] {
            let g = StaggeredGrid::boxed(2, &[nc, 4], &[length, 1.0]).unwrap();
            let rhs = ScalarField::from_fn(&g, |x, _, _| (PI * x / length).cos());
            let sol = g.neumann_laplacian_solve(&rhs, 1e-13, 20_000).unwrap();
            let exact = ScalarField::from_fn(&g, |x, _, _| {
                (length / PI).powi(2) * (PI * x / length).cos()
            });
            let mut err = 0.0f64;
            for i in 0..g.cells() {
                err = err.max((sol.p.data[i] - exact.data[i]).abs());
            }
            errors.push(err);
        }
        assert!(errors[0] / errors[1] > 3.5, "errors {errors:?}");
        assert!(errors[1] / errors[2] > 3.5, "errors {errors:?}");
    }

    #[test]
    fn nonzero_mean_is_projected_and_reported() {
        let g = StaggeredGrid::boxed(2, &[16, 16], &[1.0, 1.0]).unwrap();
        let rhs = ScalarField::from_fn(&g, |x, y, _| (2.0 * PI * x).cos() * (2.0 * PI * y).cos());
        let mut shifted = rhs.clone();
        shifted.shift(0.7);
        let a = g.neumann_laplacian_solve(&rhs, 1e-12, 10_000).unwrap();
        let b = g.neumann_laplacian_solve(&shifted, 1e-12, 10_000).unwrap();
        assert!((b.mean_removed - (a.mean_removed + 0.7)).abs() < 1e-12);
        for i in 0..g.cells() {
            assert!((a.p.data[i] - b.p.data[i]).abs() < 1e-10);
        }
    }

    // Operator consistency: solving with -lap p as the right-hand side
    // reproduces the zero-mean p.
    #[test]
    fn solve_inverts_apply() {
        let mut rng = Rng::new(31337);
        for periodic in [[false, false], [true, false]] {
            let g = StaggeredGrid::new(2, &[12, 10], &[1.0, 0.8], &[0.0; 2], &periodic).unwrap();
            let mut p = ScalarField::zeros(&g);
            for x in p.data.iter_mut() {
                *x = rng.range(-1.0, 1.0);
            }
            let m = p.mean();
            p.shift(-m);
            let mut rhs = ScalarField::zeros(&g);
            g.neg_laplacian_apply(&p.data, &mut rhs.data);
            let sol = g.neumann_laplacian_solve(&rhs, 1e-13, 50_000).unwrap();
            for i in 0..g.cells() {
                assert!(
                    (sol.p.data[i] - p.data[i]).abs() < 1e-9,
                    "periodic {periodic:?}"
                );
            }
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        // A rough random right-hand side is not a discrete eigenfunction,
        // so CG cannot finish in two iterations.
        let mut rng = Rng::new(5150);
        let g = StaggeredGrid::boxed(2, &[32, 32], &[1.0, 1.0]).unwrap();
        let mut rhs = ScalarField::zeros(&g);
        for x in rhs.data.iter_mut() {
            *x = rng.range(-1.0, 1.0);
        }
        let err = g.neumann_laplacian_solve(&rhs, 1e-13, 2).unwrap_err();
        match err {
            GridError::NonConvergence { iters, residual } => {
                assert_eq!(iters, 2);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
