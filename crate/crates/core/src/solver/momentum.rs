use super::config::convection_cutoff;
use super::walls::{wall_layer_cell, WallCoeffs, WallKind, WallSpec};
use crate::constitutive::MaterialParams;
use crate::grid::{idx3, StaggeredGrid, SymTensorField, VectorField, PAIRS};

/// Effective viscosity of the semi-implicit closure, per tensor site:
/// `mu = 2 nu* + tau / (|D_prev| + eps)`. The plug part is kept separate so
/// viscous and plastic work can be reported individually.
#[derive(Debug, Clone)]
pub struct EffectiveViscosity {
    pub visc: f64,
    pub plug_cell: Vec<f64>,
    pub plug_off: [Vec<f64>; 3],
}

/// Averages a cell-centered quantity onto an off-diagonal site of the axis
/// pair (a, b), clamping at walls and wrapping on periodic axes.
fn cells_around_off_site(
    grid: &StaggeredGrid,
    a: usize,
    b: usize,
    site: [usize; 3],
) -> [[usize; 3]; 4] {
    let pick = |axis: usize, s: usize| -> (usize, usize) {
        let n = grid.n[axis];
        if grid.periodic[axis] {
            ((s + n - 1) % n, s % n)
        } else {
            (s.saturating_sub(1).min(n - 1), s.min(n - 1))
        }
    };
    let (a0, a1) = pick(a, site[a]);
    let (b0, b1) = pick(b, site[b]);
    let mut out = [[0usize; 3]; 4];
    let mut m = 0;
    for &ca in &[a0, a1] {
        for &cb in &[b0, b1] {
            let mut q = site;
            q[a] = ca;
            q[b] = cb;
            out[m] = q;
            m += 1;
        }
    }
    out
}

fn avg_cells(grid: &StaggeredGrid, vals: &[f64], cells: &[[usize; 3]; 4]) -> f64 {
    let mut s = 0.0;
    for q in cells {
        s += vals[grid.cell_index(q[0], q[1], q[2])];
    }
    0.25 * s
}

/// Per-cell squared contributions of the tensor: the diagonal part and the
/// cell-averaged square of each off-diagonal entry.
fn cell_square_parts(grid: &StaggeredGrid, d: &SymTensorField) -> (Vec<f64>, [Vec<f64>; 3]) {
    let n = grid.n;
    let mut diag2 = vec![0.0; grid.cells()];
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let c = grid.cell_index(i, j, k);
                let mut s = 0.0;
                for a in 0..grid.dim {
                    let v = d.diag[a][c];
                    s += v * v;
                }
                diag2[c] = s;
            }
        }
    }
    let mut off2: [Vec<f64>; 3] = Default::default();
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        if b >= grid.dim {
            continue;
        }
        let od = grid.off_dims(a, b);
        let mut v = vec![0.0; grid.cells()];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let cell = [i, j, k];
                    let mut sq = 0.0;
                    for &fa in &[cell[a], grid.upper_face(a, cell[a])] {
                        for &fb in &[cell[b], grid.upper_face(b, cell[b])] {
                            let mut q = cell;
                            q[a] = fa;
                            q[b] = fb;
                            let x = d.off[p][idx3(&od, q[0], q[1], q[2])];
                            sq += x * x;
                        }
                    }
                    v[grid.cell_index(i, j, k)] = 0.25 * sq;
                }
            }
        }
        off2[p] = v;
    }
    (diag2, off2)
}

/// Frobenius norm of the full tensor gathered at each cell (off-diagonal
/// squares averaged from their surrounding sites).
pub fn cell_norms(grid: &StaggeredGrid, d: &SymTensorField) -> Vec<f64> {
    let (diag2, off2) = cell_square_parts(grid, d);
    let mut out = diag2;
    for p in 0..3 {
        if off2[p].is_empty() {
            continue;
        }
        for (o, s) in out.iter_mut().zip(off2[p].iter()) {
            *o += 2.0 * s;
        }
    }
    for o in out.iter_mut() {
        *o = o.sqrt();
    }
    out
}

/// Frobenius norm at every off-diagonal site: the site's own entry enters
/// exactly; only the components that do not live there are interpolated
/// from the adjacent cells. Keeping the local entry exact matters at yield
/// surfaces, where smoothing the dominant component dilutes the plastic
/// stress and erodes the plug boundary.
pub fn off_site_norms(grid: &StaggeredGrid, d: &SymTensorField) -> [Vec<f64>; 3] {
    let (diag2, off2) = cell_square_parts(grid, d);
    let mut out: [Vec<f64>; 3] = Default::default();
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        if b >= grid.dim {
            continue;
        }
        // Squared remainder (everything except this pair) per cell.
        let mut rem = diag2.clone();
        for (q, v) in off2.iter().enumerate() {
            if q == p || v.is_empty() {
                continue;
            }
            for (r, s) in rem.iter_mut().zip(v.iter()) {
                *r += 2.0 * s;
            }
        }
        let od = grid.off_dims(a, b);
        let mut norms = vec![0.0; od[0] * od[1] * od[2]];
        for k in 0..od[2] {
            for j in 0..od[1] {
                for i in 0..od[0] {
                    let cells = cells_around_off_site(grid, a, b, [i, j, k]);
                    let own = d.off[p][idx3(&od, i, j, k)];
                    let mut s = 2.0 * own * own;
                    let mut back = 0.0;
                    for q in &cells {
                        back += rem[grid.cell_index(q[0], q[1], q[2])];
                    }
                    s += 0.25 * back;
                    norms[idx3(&od, i, j, k)] = s.sqrt();
                }
            }
        }
        out[p] = norms;
    }
    out
}

/// Cell field interpolated to the off-diagonal sites of every pair.
pub fn cell_to_off_sites(grid: &StaggeredGrid, vals: &[f64]) -> [Vec<f64>; 3] {
    let mut out: [Vec<f64>; 3] = Default::default();
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        if b >= grid.dim {
            continue;
        }
        let od = grid.off_dims(a, b);
        let mut v = vec![0.0; od[0] * od[1] * od[2]];
        for k in 0..od[2] {
            for j in 0..od[1] {
                for i in 0..od[0] {
                    let cells = cells_around_off_site(grid, a, b, [i, j, k]);
                    v[idx3(&od, i, j, k)] = avg_cells(grid, vals, &cells);
                }
            }
        }
        out[p] = v;
    }
    out
}

/// Builds the effective viscosity from the previous iterate's strain rate
/// and the activated yield stress `tau_cell = q*(p_s - p_f)^+`.
pub fn effective_viscosity(
    grid: &StaggeredGrid,
    d_prev: &SymTensorField,
    tau_cell: &[f64],
    params: &MaterialParams,
) -> EffectiveViscosity {
    let norms = cell_norms(grid, d_prev);
    let eps = params.epsilon;
    let plug_cell: Vec<f64> = tau_cell
        .iter()
        .zip(norms.iter())
        .map(|(t, n)| t / (n + eps))
        .collect();
    let tau_off = cell_to_off_sites(grid, tau_cell);
    let norms_off = off_site_norms(grid, d_prev);
    let plug_off = std::array::from_fn(|p| {
        tau_off[p]
            .iter()
            .zip(norms_off[p].iter())
            .map(|(t, n)| t / (n + eps))
            .collect()
    });
    EffectiveViscosity {
        visc: 2.0 * params.nu_star,
        plug_cell,
        plug_off,
    }
}

/// Regularized extra stress field `Z = tau D / (|D| + eps)` on the native
/// staggering, using the same site norms as the effective viscosity.
pub fn regularized_stress_field(
    grid: &StaggeredGrid,
    d: &SymTensorField,
    tau_cell: &[f64],
    params: &MaterialParams,
) -> SymTensorField {
    let mu = effective_viscosity(grid, d, tau_cell, params);
    let mut z = SymTensorField::zeros(grid);
    for a in 0..grid.dim {
        for (i, out) in z.diag[a].iter_mut().enumerate() {
            *out = mu.plug_cell[i] * d.diag[a][i];
        }
    }
    for p in 0..3 {
        for (i, out) in z.off[p].iter_mut().enumerate() {
            *out = mu.plug_off[p][i] * d.off[p][i];
        }
    }
    z
}

/// One linear-in-velocity tensor-site contribution of the discrete weak
/// form: up to four (component, flat DOF, coefficient) stencil entries, an
/// affine offset from moving Dirichlet walls, the site weight (including
/// the factor 2 on off-diagonal entries), and the two viscosity parts.
struct FormSite {
    stencil: [(usize, usize, f64); 4],
    len: usize,
    d_aff: f64,
    weight: f64,
    visc: f64,
    plug: f64,
}

/// Momentum-step linear system: `(vol rho/dt) I + D^T (mu D) + Robin`,
/// assembled matrix-free over the flattened face DOFs.
pub struct MomentumSystem<'a> {
    pub grid: StaggeredGrid,
    pub mass: f64,
    pub mu: EffectiveViscosity,
    pub robin: &'a WallCoeffs,
    pub walls: &'a WallSpec,
    pub offsets: [usize; 4],
    pub mask: Vec<bool>,
}

pub fn dof_offsets(grid: &StaggeredGrid) -> [usize; 4] {
    let mut off = [0usize; 4];
    for a in 0..3 {
        let len = if a < grid.dim { grid.face_count(a) } else { 0 };
        off[a + 1] = off[a] + len;
    }
    off
}

/// Constrained-DOF mask: wall faces of each component along its own axis.
pub fn dof_mask(grid: &StaggeredGrid) -> Vec<bool> {
    let offsets = dof_offsets(grid);
    let mut mask = vec![false; offsets[3]];
    for a in 0..grid.dim {
        if grid.periodic[a] {
            continue;
        }
        let d = grid.face_dims(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    if [i, j, k][a] == 0 || [i, j, k][a] == grid.n[a] {
                        mask[offsets[a] + idx3(&d, i, j, k)] = true;
                    }
                }
            }
        }
    }
    mask
}

pub fn flatten(v: &VectorField, offsets: &[usize; 4]) -> Vec<f64> {
    let mut out = vec![0.0; offsets[3]];
    for a in 0..v.grid.dim {
        out[offsets[a]..offsets[a + 1]].copy_from_slice(&v.comp[a]);
    }
    out
}

pub fn unflatten(grid: &StaggeredGrid, x: &[f64], offsets: &[usize; 4]) -> VectorField {
    let mut v = VectorField::zeros(grid);
    for a in 0..grid.dim {
        v.comp[a].copy_from_slice(&x[offsets[a]..offsets[a + 1]]);
    }
    v
}

impl<'a> MomentumSystem<'a> {
    pub fn new(
        grid: StaggeredGrid,
        mu: EffectiveViscosity,
        robin: &'a WallCoeffs,
        walls: &'a WallSpec,
        rho_star: f64,
        dt: f64,
    ) -> Self {
        MomentumSystem {
            grid,
            mass: grid.cell_volume() * rho_star / dt,
            mu,
            robin,
            walls,
            offsets: dof_offsets(&grid),
            mask: dof_mask(&grid),
        }
    }

    pub fn ndof(&self) -> usize {
        self.offsets[3]
    }

    #[inline]
    fn fdof(&self, comp: usize, q: [usize; 3]) -> usize {
        self.offsets[comp] + idx3(&self.grid.face_dims(comp), q[0], q[1], q[2])
    }

    fn visit_diag_sites(&self, mut f: impl FnMut(FormSite)) {
        let g = &self.grid;
        let vol = g.cell_volume();
        for a in 0..g.dim {
            let inv_h = 1.0 / g.h[a];
            for k in 0..g.n[2] {
                for j in 0..g.n[1] {
                    for i in 0..g.n[0] {
                        let cell = [i, j, k];
                        let c = g.cell_index(i, j, k);
                        let mut up = cell;
                        up[a] = g.upper_face(a, cell[a]);
                        f(FormSite {
                            stencil: [
                                (a, self.fdof(a, up), inv_h),
                                (a, self.fdof(a, cell), -inv_h),
                                (0, 0, 0.0),
                                (0, 0, 0.0),
                            ],
                            len: 2,
                            d_aff: 0.0,
                            weight: vol,
                            visc: self.mu.visc,
                            plug: self.mu.plug_cell[c],
                        });
                    }
                }
            }
        }
    }

    fn visit_off_sites(&self, mut f: impl FnMut(FormSite)) {
        let g = &self.grid;
        let vol = g.cell_volume();
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            if b >= g.dim {
                continue;
            }
            let od = g.off_dims(a, b);
            for k in 0..od[2] {
                for j in 0..od[1] {
                    for i in 0..od[0] {
                        let site = [i, j, k];
                        let sa = site[a];
                        let sb = site[b];
                        let bnd_a = !g.periodic[a] && (sa == 0 || sa == g.n[a]);
                        let bnd_b = !g.periodic[b] && (sb == 0 || sb == g.n[b]);
                        if bnd_a && bnd_b {
                            continue;
                        }
                        let plug = self.mu.plug_off[p][idx3(&od, i, j, k)];
                        if !bnd_a && !bnd_b {
                            // Interior: D_ab = (dv_a/dx_b + dv_b/dx_a) / 2.
                            let wrap = |axis: usize, s: usize| {
                                if g.periodic[axis] {
                                    (s + g.n[axis] - 1) % g.n[axis]
                                } else {
                                    s - 1
                                }
                            };
                            let mut hi_b = site;
                            hi_b[b] = sb % g.n[b];
                            let mut lo_b = site;
                            lo_b[b] = wrap(b, sb);
                            let mut hi_a = site;
                            hi_a[a] = sa % g.n[a];
                            let mut lo_a = site;
                            lo_a[a] = wrap(a, sa);
                            let cb = 0.5 / g.h[b];
                            let ca = 0.5 / g.h[a];
                            f(FormSite {
                                stencil: [
                                    (a, self.fdof(a, hi_b), cb),
                                    (a, self.fdof(a, lo_b), -cb),
                                    (b, self.fdof(b, hi_a), ca),
                                    (b, self.fdof(b, lo_a), -ca),
                                ],
                                len: 4,
                                d_aff: 0.0,
                                weight: 2.0 * vol,
                                visc: self.mu.visc,
                                plug,
                            });
                        } else {
                            // Exactly one wall index: the site carries the
                            // Dirichlet wall shear; stick-slip walls act
                            // through the Robin term instead.
                            let (w_axis, w_idx, t_comp) =
                                if bnd_b { (b, sb, a) } else { (a, sa, b) };
                            let side = if w_idx == 0 { 0 } else { 1 };
                            let WallKind::Dirichlet(uvec) = self.walls.at(w_axis, side) else {
                                continue;
                            };
                            let u_wall = uvec[t_comp];
                            let inv_h = 1.0 / g.h[w_axis];
                            let mut near = site;
                            near[w_axis] = wall_layer_cell(g, w_axis, side);
                            let (coeff, d_aff) = if side == 0 {
                                (inv_h, -u_wall * inv_h)
                            } else {
                                (-inv_h, u_wall * inv_h)
                            };
                            f(FormSite {
                                stencil: [
                                    (t_comp, self.fdof(t_comp, near), coeff),
                                    (0, 0, 0.0),
                                    (0, 0, 0.0),
                                    (0, 0, 0.0),
                                ],
                                len: 1,
                                d_aff,
                                weight: 2.0 * (0.5 * vol),
                                visc: self.mu.visc,
                                plug,
                            });
                        }
                    }
                }
            }
        }
    }

    /// `out = A x` with constrained DOFs projected out.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = self.mass * x[i];
        }
        let mut scatter = |s: FormSite| {
            let mut d = 0.0;
            for (comp, dof, c) in s.stencil.iter().take(s.len) {
                let _ = comp;
                d += c * x[*dof];
            }
            let flux = (s.visc + s.plug) * s.weight * d;
            for (_, dof, c) in s.stencil.iter().take(s.len) {
                out[*dof] += c * flux;
            }
        };
        self.visit_diag_sites(&mut scatter);
        self.visit_off_sites(&mut scatter);
        let offsets = self.offsets;
        self.robin.for_each_site(|t, fidx, c, area| {
            let dof = offsets[t] + fidx;
            out[dof] += c * area * x[dof];
        });
        for (i, m) in self.mask.iter().enumerate() {
            if *m {
                out[i] = 0.0;
            }
        }
    }

    /// Diagonal of `A`, for Jacobi preconditioning.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = vec![self.mass; self.ndof()];
        let mut add = |s: FormSite| {
            let mu = (s.visc + s.plug) * s.weight;
            for (_, dof, c) in s.stencil.iter().take(s.len) {
                diag[*dof] += mu * c * c;
            }
        };
        self.visit_diag_sites(&mut add);
        self.visit_off_sites(&mut add);
        let offsets = self.offsets;
        self.robin.for_each_site(|t, fidx, c, area| {
            diag[offsets[t] + fidx] += c * area;
        });
        for (i, m) in self.mask.iter().enumerate() {
            if *m {
                diag[i] = 1.0;
            }
        }
        diag
    }

    /// Adds the affine Dirichlet-wall pull `-D^T(mu D_aff)` to the
    /// right-hand side.
    pub fn affine_rhs_into(&self, rhs: &mut [f64]) {
        self.visit_off_sites(|s| {
            if s.d_aff == 0.0 {
                return;
            }
            let flux = (s.visc + s.plug) * s.weight * s.d_aff;
            for (_, dof, c) in s.stencil.iter().take(s.len) {
                rhs[*dof] -= c * flux;
            }
        });
    }

    /// Form work `sum mu D_full(x) D_lin(x) w` split into the Newtonian and
    /// plug-viscosity parts. Equals the exact pairing of the discrete
    /// stress term with `x` in the energy identity.
    pub fn form_work(&self, x: &[f64]) -> (f64, f64) {
        let mut visc = 0.0;
        let mut plug = 0.0;
        let mut tally = |s: FormSite| {
            let mut d_lin = 0.0;
            for (_, dof, c) in s.stencil.iter().take(s.len) {
                d_lin += c * x[*dof];
            }
            let d_full = d_lin + s.d_aff;
            visc += s.visc * s.weight * d_full * d_lin;
            plug += s.plug * s.weight * d_full * d_lin;
        };
        self.visit_diag_sites(&mut tally);
        self.visit_off_sites(&mut tally);
        (visc, plug)
    }
}

/// Skew-symmetric (divergence-form, centered) MAC convection `N(v)` with an
/// optional smooth cutoff factor. Exactly energy-neutral against `v` when
/// `div v = 0` and the walls are impermeable.
pub fn convection(grid: &StaggeredGrid, v: &VectorField, trunc: Option<f64>) -> VectorField {
    let mut out = VectorField::zeros(grid);
    for a in 0..grid.dim {
        let d = grid.face_dims(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let site = [i, j, k];
                    let fa = site[a];
                    if grid.is_wall_face(a, fa) {
                        continue;
                    }
                    let mut n_val = 0.0;

                    // Along-axis flux difference between the two cells
                    // adjacent to this face.
                    let (cell_lo, cell_hi) = adjacent_cells(grid, a, fa);
                    let f_cell = |cell: usize| {
                        let mut lo_q = site;
                        lo_q[a] = grid.lower_face(a, cell);
                        let mut hi_q = site;
                        hi_q[a] = grid.upper_face(a, cell);
                        let ubar = 0.5
                            * (v.comp[a][idx3(&d, lo_q[0], lo_q[1], lo_q[2])]
                                + v.comp[a][idx3(&d, hi_q[0], hi_q[1], hi_q[2])]);
                        ubar * ubar
                    };
                    n_val += (f_cell(cell_hi) - f_cell(cell_lo)) / grid.h[a];

                    // Transverse fluxes through the edge planes of the
                    // control volume.
                    for b in 0..grid.dim {
                        if b == a {
                            continue;
                        }
                        let db = grid.face_dims(b);
                        let cb = site[b];
                        let node_flux = |jb: usize| -> f64 {
                            if !grid.periodic[b] && (jb == 0 || jb == grid.n[b]) {
                                return 0.0;
                            }
                            // Advecting normal velocity averaged over the two
                            // cells adjacent to the a-face.
                            let mut adv = 0.0;
                            for &ca in &[cell_lo, cell_hi] {
                                let mut q = site;
                                q[a] = ca;
                                q[b] = jb % db[b];
                                adv += v.comp[b][idx3(&db, q[0], q[1], q[2])];
                            }
                            adv *= 0.5;
                            // Advected component averaged across the edge.
                            let hi_cell = jb % grid.n[b];
                            let lo_cell = (jb + grid.n[b] - 1) % grid.n[b];
                            let mut qh = site;
                            qh[b] = hi_cell;
                            let mut ql = site;
                            ql[b] = lo_cell;
                            let carried = 0.5
                                * (v.comp[a][idx3(&d, qh[0], qh[1], qh[2])]
                                    + v.comp[a][idx3(&d, ql[0], ql[1], ql[2])]);
                            adv * carried
                        };
                        let up_node = if grid.periodic[b] {
                            (cb + 1) % grid.n[b]
                        } else {
                            cb + 1
                        };
                        n_val += (node_flux(up_node) - node_flux(cb)) / grid.h[b];
                    }

                    if let Some(n_cut) = trunc {
                        let own = v.comp[a][idx3(&d, i, j, k)];
                        let mut speed2 = own * own;
                        for b in 0..grid.dim {
                            if b == a {
                                continue;
                            }
                            let db = grid.face_dims(b);
                            let mut s = 0.0;
                            for &ca in &[cell_lo, cell_hi] {
                                for &fb in &[site[b], grid.upper_face(b, site[b])] {
                                    let mut q = site;
                                    q[a] = ca;
                                    q[b] = fb;
                                    s += v.comp[b][idx3(&db, q[0], q[1], q[2])];
                                }
                            }
                            let bar = 0.25 * s;
                            speed2 += bar * bar;
                        }
                        n_val *= convection_cutoff(speed2, n_cut);
                    }

                    out.comp[a][idx3(&d, i, j, k)] = n_val;
                }
            }
        }
    }
    out
}

/// Indices of the cells below and above face `f` along axis `a`.
fn adjacent_cells(grid: &StaggeredGrid, a: usize, f: usize) -> (usize, usize) {
    if grid.periodic[a] {
        ((f + grid.n[a] - 1) % grid.n[a], f % grid.n[a])
    } else {
        (f - 1, f)
    }
}
