use crate::constitutive::MaterialParams;
use crate::grid::{idx3, StaggeredGrid, VectorField};

/// Closure applied on one wall of the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallKind {
    /// Threshold-slip law: the wall exerts the tangential traction
    /// `s* v_tau/(|v_tau| + eps) + gamma* v_tau` on the fluid (Robin form
    /// with the coefficient lagged to the previous Picard iterate).
    StickSlip,
    /// Prescribed tangential wall velocity (the infinite-friction limit);
    /// used for moving lids and no-slip walls.
    Dirichlet([f64; 3]),
}

/// Per-wall closures, indexed `[axis][side]` with side 0 the low wall.
/// Entries on periodic axes are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSpec {
    pub kind: [[WallKind; 2]; 3],
}

impl WallSpec {
    pub fn stick_slip() -> Self {
        WallSpec {
            kind: [[WallKind::StickSlip; 2]; 3],
        }
    }

    pub fn no_slip() -> Self {
        WallSpec {
            kind: [[WallKind::Dirichlet([0.0; 3]); 2]; 3],
        }
    }

    pub fn at(&self, axis: usize, side: usize) -> WallKind {
        self.kind[axis][side]
    }
}

/// Robin coefficients `(gamma* + s*/(|v_tau| + eps))` for every stick-slip
/// wall, evaluated on the near-wall layer of each tangential component.
///
/// The layer for wall `(w, side)` and tangential component `t` has the face
/// dimensions of component `t` with the `w` axis collapsed to one cell.
#[derive(Debug, Clone)]
pub struct WallCoeffs {
    pub grid: StaggeredGrid,
    /// `coeff[w][side][t]`: Some(per-site effective Robin coefficients) on
    /// stick-slip walls.
    pub coeff: [[[Option<Vec<f64>>; 3]; 2]; 3],
    /// Wall-to-near-site velocity ratio `|v_wall| / |v_near|` per site,
    /// from the half-cell composite; used by the wall diagnostics.
    pub wall_ratio: [[[Option<Vec<f64>>; 3]; 2]; 3],
}

/// Dimensions of the near-wall layer of component `t` faces at a `w` wall.
pub fn wall_layer_dims(grid: &StaggeredGrid, w: usize, t: usize) -> [usize; 3] {
    let mut d = grid.face_dims(t);
    d[w] = 1;
    d
}

/// Cell index along `w` of the layer adjacent to wall `(w, side)`.
pub fn wall_layer_cell(grid: &StaggeredGrid, w: usize, side: usize) -> usize {
    if side == 0 {
        0
    } else {
        grid.n[w] - 1
    }
}

/// Full tangential velocity at a face of component `t` inside the wall
/// layer, in site-local tangent coordinates: slot 0 is the site's own
/// component, slot 1 the other tangential component interpolated from its
/// four surrounding faces.
pub fn tangential_vector(
    grid: &StaggeredGrid,
    v: &VectorField,
    w: usize,
    t: usize,
    site: [usize; 3],
) -> [f64; 3] {
    let own = v.comp[t][idx3(&grid.face_dims(t), site[0], site[1], site[2])];
    if grid.dim == 2 {
        return [own, 0.0, 0.0];
    }
    // The remaining axis is the other tangential direction.
    let u = 3 - w - t;
    let du = grid.face_dims(u);
    // Cells adjacent to the t-face along t; on non-periodic axis-t walls the
    // site is a constrained normal face and never used, clamp defensively.
    let ft = site[t];
    let nt = grid.n[t];
    let (ca, cb) = if grid.periodic[t] {
        ((ft + nt - 1) % nt, ft % nt)
    } else {
        (ft.saturating_sub(1), ft.min(nt - 1))
    };
    let mut sum = 0.0;
    for &ct in &[ca, cb] {
        for &fu in &[site[u], grid.upper_face(u, site[u])] {
            let mut q = site;
            q[t] = ct;
            q[u] = fu;
            sum += v.comp[u][idx3(&du, q[0], q[1], q[2])];
        }
    }
    [own, 0.25 * sum, 0.0]
}

/// Visits every near-wall tangential face of every stick-slip wall:
/// `f(w_axis, side, t_comp, site, flat_face_index, wall_area)`.
pub fn for_each_stick_slip_site(
    grid: &StaggeredGrid,
    walls: &WallSpec,
    mut f: impl FnMut(usize, usize, usize, [usize; 3], usize, f64),
) {
    let vol = grid.cell_volume();
    for w in 0..grid.dim {
        if grid.periodic[w] {
            continue;
        }
        for side in 0..2 {
            if !matches!(walls.at(w, side), WallKind::StickSlip) {
                continue;
            }
            let cw = wall_layer_cell(grid, w, side);
            let area = vol / grid.h[w];
            for t in 0..grid.dim {
                if t == w {
                    continue;
                }
                let ld = wall_layer_dims(grid, w, t);
                let dt = grid.face_dims(t);
                for k in 0..ld[2] {
                    for j in 0..ld[1] {
                        for i in 0..ld[0] {
                            let mut site = [i, j, k];
                            site[w] = cw;
                            let fidx = idx3(&dt, site[0], site[1], site[2]);
                            f(w, side, t, site, fidx, area);
                        }
                    }
                }
            }
        }
    }
}

/// Builds the Robin closure from the previous iterate's wall velocity:
/// wall-normal faces stay fixed at zero and every stick-slip wall gets the
/// lagged coefficient `gamma* + s*/(|v_tau| + eps)` per tangential site.
/// Solves the half-cell composite at one wall site: the slip law
/// `t = (gamma* + s*/(|v_w| + eps)) v_w` at the wall in series with the
/// viscous bridge `t = mu_w (v_near - v_w) / (h_w/2) / 2` across the half
/// cell between the wall and the first tangential velocity row. Returns
/// `(c_eff, ratio)` with the traction `t = c_eff v_near` and
/// `v_w = ratio * v_near`.
///
/// Bridging the half cell keeps the wall layer second-order accurate; in
/// the stick limit it reduces to the one-sided Dirichlet treatment.
fn composite_wall_coefficient(
    speed_near: f64,
    tau_wall: f64,
    h_wall: f64,
    params: &MaterialParams,
) -> (f64, f64) {
    let eps = params.epsilon;
    let slip = |v_w: f64| params.gamma_star + params.s_star / (v_w + eps);
    // Wall-site strain-rate magnitude from the half-cell shear
    // (pure-shear form |D| = sqrt(2) |d v_t / d w| / 2).
    let bridge = |v_w: f64| {
        let d_norm = (speed_near - v_w).abs() / (0.5 * h_wall) / 2f64.sqrt();
        (2.0 * params.nu_star + tau_wall / (d_norm + eps)) / h_wall
    };
    if speed_near <= 0.0 {
        let c_slip = slip(0.0);
        let g = bridge(0.0);
        return (c_slip * g / (c_slip + g), g / (c_slip + g));
    }
    // The slip traction grows and the bridge traction falls with v_w, so
    // the balance slip(v_w) v_w = g(v_w) (v_near - v_w) has a unique root;
    // bisection keeps it deterministic.
    let mut lo = 0.0f64;
    let mut hi = speed_near;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let balance = slip(mid) * mid - bridge(mid) * (speed_near - mid);
        if balance > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let v_w = 0.5 * (lo + hi);
    let ratio = v_w / speed_near;
    (slip(v_w) * ratio, ratio)
}

pub fn enforce_slip(
    v_prev: &VectorField,
    tau_cell: &[f64],
    params: &MaterialParams,
    walls: &WallSpec,
) -> WallCoeffs {
    let grid = v_prev.grid;
    let mut coeff: [[[Option<Vec<f64>>; 3]; 2]; 3] = Default::default();
    let mut wall_ratio: [[[Option<Vec<f64>>; 3]; 2]; 3] = Default::default();
    for_each_stick_slip_site(&grid, walls, |w, side, t, site, _fidx, _area| {
        let ld = wall_layer_dims(&grid, w, t);
        let len = ld[0] * ld[1] * ld[2];
        let c = coeff[w][side][t].get_or_insert_with(|| vec![0.0; len]);
        let r = wall_ratio[w][side][t].get_or_insert_with(|| vec![0.0; len]);
        let v_tau = tangential_vector(&grid, v_prev, w, t, site);
        let speed = crate::constitutive::vec_norm(&v_tau);
        // Yield stress of the adjacent cell (t-face clamped to a cell).
        let mut cell = site;
        cell[t] = site[t].min(grid.n[t] - 1);
        let tau_wall = tau_cell[grid.cell_index(cell[0], cell[1], cell[2])];
        let (c_eff, ratio) = composite_wall_coefficient(speed, tau_wall, grid.h[w], params);
        let mut layer = site;
        layer[w] = 0;
        let idx = idx3(&ld, layer[0], layer[1], layer[2]);
        c[idx] = c_eff;
        r[idx] = ratio;
    });
    WallCoeffs {
        grid,
        coeff,
        wall_ratio,
    }
}

impl WallCoeffs {
    /// Closure with no Robin sites (all walls Dirichlet or periodic).
    pub fn empty(grid: &StaggeredGrid) -> Self {
        WallCoeffs {
            grid: *grid,
            coeff: Default::default(),
            wall_ratio: Default::default(),
        }
    }

    /// Visits every stick-slip Robin site: calls
    /// `f(t_comp, face_index_in_comp_t, coefficient, wall_area)`.
    pub fn for_each_site(&self, mut f: impl FnMut(usize, usize, f64, f64)) {
        let grid = self.grid;
        let vol = grid.cell_volume();
        for w in 0..grid.dim {
            for side in 0..2 {
                for t in 0..grid.dim {
                    let Some(c) = &self.coeff[w][side][t] else {
                        continue;
                    };
                    let area = vol / grid.h[w];
                    let ld = wall_layer_dims(&grid, w, t);
                    let dt = grid.face_dims(t);
                    let cw = wall_layer_cell(&grid, w, side);
                    for k in 0..ld[2] {
                        for j in 0..ld[1] {
                            for i in 0..ld[0] {
                                let mut site = [i, j, k];
                                site[w] = cw;
                                let fidx = idx3(&dt, site[0], site[1], site[2]);
                                f(t, fidx, c[idx3(&ld, i, j, k)], area);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Total Robin power `sum coeff * v_t^2 * area`.
    pub fn robin_work(&self, v: &VectorField) -> f64 {
        let mut s = 0.0;
        self.for_each_site(|t, fidx, c, area| {
            let val = v.comp[t][fidx];
            s += c * val * val * area;
        });
        s
    }

    /// Wall-to-near-site velocity ratio at one site.
    pub fn ratio_at(&self, w: usize, side: usize, t: usize, site: [usize; 3]) -> f64 {
        let ld = wall_layer_dims(&self.grid, w, t);
        let mut layer = site;
        layer[w] = 0;
        self.wall_ratio[w][side][t]
            .as_ref()
            .map(|r| r[idx3(&ld, layer[0], layer[1], layer[2])])
            .unwrap_or(0.0)
    }
}
