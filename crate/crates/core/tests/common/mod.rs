//! Shared test helpers: a Newtonian reference projection integrator built
//! on the same discrete operators but bypassing the constitutive path
//! entirely (zero plug viscosity, no yield evaluation).

use yieldflow::constitutive::MaterialParams;
use yieldflow::grid::{cg, StaggeredGrid, VectorField, PAIRS};
use yieldflow::solver::{
    convection, dof_mask, dof_offsets, flatten, project_detailed, unflatten, BodyForce,
    EffectiveViscosity, MomentumSystem, SolverConfig, WallCoeffs, WallSpec,
};

/// Advances `v` by `steps` of explicit-convection, implicit-viscosity
/// projection stepping with Dirichlet walls. Returns the velocity and the
/// accumulated time.
pub fn newtonian_reference_run(
    grid: &StaggeredGrid,
    walls: &WallSpec,
    body: &BodyForce,
    params: &MaterialParams,
    cfg: &SolverConfig,
    mut v: VectorField,
    steps: usize,
) -> (VectorField, f64) {
    let offsets = dof_offsets(grid);
    let mask = dof_mask(grid);
    let mut t = 0.0f64;
    for _ in 0..steps {
        let max_abs = v.max_abs();
        let rate: f64 = (0..grid.dim).map(|a| max_abs[a] / grid.h[a]).sum();
        let dt = if rate <= 0.0 {
            cfg.dt_initial
        } else {
            cfg.dt_initial.min(cfg.cfl_target / rate)
        };
        let mu = EffectiveViscosity {
            visc: 2.0 * params.nu_star,
            plug_cell: vec![0.0; grid.cells()],
            plug_off: std::array::from_fn(|p| {
                let (a, b) = PAIRS[p];
                if b < grid.dim {
                    let d = grid.off_dims(a, b);
                    vec![0.0; d[0] * d[1] * d[2]]
                } else {
                    Vec::new()
                }
            }),
        };
        let robin = WallCoeffs::empty(grid);
        let sys = MomentumSystem::new(*grid, mu, &robin, walls, params.rho_star, dt);
        let conv = convection(grid, &v, None);
        let b_field = body.field(grid, t + dt);
        let v_flat = flatten(&v, &offsets);
        let conv_flat = flatten(&conv, &offsets);
        let body_flat = flatten(&b_field, &offsets);
        let rho_vol = params.rho_star * grid.cell_volume();
        let mut rhs = vec![0.0; sys.ndof()];
        for i in 0..rhs.len() {
            rhs[i] = sys.mass * v_flat[i] + rho_vol * (body_flat[i] - conv_flat[i]);
        }
        sys.affine_rhs_into(&mut rhs);
        for (i, m) in mask.iter().enumerate() {
            if *m {
                rhs[i] = 0.0;
            }
        }
        let diag = sys.diagonal();
        let mut x = v_flat.clone();
        for (i, m) in mask.iter().enumerate() {
            if *m {
                x[i] = 0.0;
            }
        }
        let out = cg(
            |p, o| sys.apply(p, o),
            &rhs,
            &mut x,
            1e-12,
            4 * sys.ndof() + 200,
            Some(&diag),
        );
        assert!(out.converged, "reference momentum solve stalled");
        let v_star = unflatten(grid, &x, &offsets);
        let proj = project_detailed(&v_star, params.rho_star, dt, cfg.projection_tol)
            .expect("reference projection failed");
        v = proj.v;
        t += dt;
    }
    (v, t)
}
