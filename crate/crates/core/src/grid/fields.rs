use super::{idx3, GridError, StaggeredGrid, PAIRS};

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: StaggeredGrid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &StaggeredGrid) -> Self {
        ScalarField {
            grid: *grid,
            data: vec![0.0; grid.cells()],
        }
    }

    pub fn from_fn(grid: &StaggeredGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut out = ScalarField::zeros(grid);
        let n = grid.n;
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let c = grid.cell_center(i, j, k);
                    out.data[grid.cell_index(i, j, k)] = f(c[0], c[1], c[2]);
                }
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.cell_index(i, j, k)]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Sum of values times cell volume.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Volume-weighted L2 norm.
    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|x| x * x).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn shift(&mut self, value: f64) {
        for x in self.data.iter_mut() {
            *x += value;
        }
    }

    pub fn check_same_grid(&self, grid: &StaggeredGrid) -> Result<(), GridError> {
        if self.grid != *grid {
            return Err(GridError::ShapeMismatch("scalar field grid"));
        }
        Ok(())
    }
}

/// Face-centered vector field; component `a` lives on faces normal to axis `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: StaggeredGrid,
    pub comp: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: &StaggeredGrid) -> Self {
        let comp = std::array::from_fn(|a| {
            if a < grid.dim {
                vec![0.0; grid.face_count(a)]
            } else {
                Vec::new()
            }
        });
        VectorField { grid: *grid, comp }
    }

    #[inline]
    pub fn at(&self, a: usize, i: usize, j: usize, k: usize) -> f64 {
        self.comp[a][idx3(&self.grid.face_dims(a), i, j, k)]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, i: usize, j: usize, k: usize) -> &mut f64 {
        let idx = idx3(&self.grid.face_dims(a), i, j, k);
        &mut self.comp[a][idx]
    }

    /// Maximum |component| per axis.
    pub fn max_abs(&self) -> [f64; 3] {
        std::array::from_fn(|a| self.comp[a].iter().fold(0.0f64, |m, x| m.max(x.abs())))
    }

    pub fn norm_inf(&self) -> f64 {
        self.max_abs().iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comp.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    /// Visits every wall face of component `a` (both sides of the axis).
    fn for_each_wall_face(&self, a: usize, mut f: impl FnMut(usize)) {
        let g = self.grid;
        if g.periodic[a] {
            return;
        }
        let d = g.face_dims(a);
        let (b, c) = match a {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for kc in 0..d[c] {
            for jb in 0..d[b] {
                for &fa in &[0, g.n[a]] {
                    let mut q = [0usize; 3];
                    q[a] = fa;
                    q[b] = jb;
                    q[c] = kc;
                    f(idx3(&d, q[0], q[1], q[2]));
                }
            }
        }
    }

    /// Zeroes the normal components on wall faces (impermeability).
    pub fn constrain_wall_normals(&mut self) {
        for a in 0..self.grid.dim {
            let mut indices = Vec::new();
            self.for_each_wall_face(a, |idx| indices.push(idx));
            for idx in indices {
                self.comp[a][idx] = 0.0;
            }
        }
    }

    /// Largest |normal component| found on a wall face.
    pub fn wall_normal_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.grid.dim {
            let comp = &self.comp[a];
            self.for_each_wall_face(a, |idx| worst = worst.max(comp[idx].abs()));
        }
        worst
    }

    /// Interpolates all components to the center of cell (i, j, k).
    pub fn at_cell_center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let g = self.grid;
        let mut out = [0.0; 3];
        for a in 0..g.dim {
            let d = g.face_dims(a);
            let c = [i, j, k];
            let lo = c[a];
            let hi = g.upper_face(a, c[a]);
            let pick = |f: usize| {
                let mut q = c;
                q[a] = f;
                self.comp[a][idx3(&d, q[0], q[1], q[2])]
            };
            out[a] = 0.5 * (pick(lo) + pick(hi));
        }
        out
    }

    /// Face-site dot product weighted by cell volume,
    /// `sum_a sum_faces u_a v_a * vol`.
    pub fn dot_vol(&self, other: &VectorField) -> f64 {
        let mut s = 0.0;
        for a in 0..self.grid.dim {
            s += self.comp[a]
                .iter()
                .zip(other.comp[a].iter())
                .map(|(x, y)| x * y)
                .sum::<f64>();
        }
        s * self.grid.cell_volume()
    }

    pub fn check_same_grid(&self, grid: &StaggeredGrid) -> Result<(), GridError> {
        if self.grid != *grid {
            return Err(GridError::ShapeMismatch("vector field grid"));
        }
        Ok(())
    }
}

/// Symmetric-tensor field on MAC staggering: diagonal entries at cell
/// centers, off-diagonal entry (a, b) on the edges shared by axes a and b.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub grid: StaggeredGrid,
    pub diag: [Vec<f64>; 3],
    pub off: [Vec<f64>; 3],
}

impl SymTensorField {
    pub fn zeros(grid: &StaggeredGrid) -> Self {
        let cells = grid.cells();
        let diag = std::array::from_fn(|a| if a < grid.dim { vec![0.0; cells] } else { Vec::new() });
        let off = std::array::from_fn(|p| {
            let (a, b) = PAIRS[p];
            if b < grid.dim {
                let d = grid.off_dims(a, b);
                vec![0.0; d[0] * d[1] * d[2]]
            } else {
                Vec::new()
            }
        });
        SymTensorField {
            grid: *grid,
            diag,
            off,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.diag
            .iter()
            .chain(self.off.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Frobenius pairing `sum_sites A : B` with unit weights per site
    /// (off-diagonals count twice).
    pub fn dot_sites(&self, other: &SymTensorField) -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            s += self.diag[a]
                .iter()
                .zip(other.diag[a].iter())
                .map(|(x, y)| x * y)
                .sum::<f64>();
            s += 2.0
                * self.off[a]
                    .iter()
                    .zip(other.off[a].iter())
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
        }
        s
    }

    /// Gathers the full tensor at the center of cell (i, j, k), averaging
    /// off-diagonal sites onto the cell.
    pub fn at_cell_center(&self, i: usize, j: usize, k: usize) -> crate::constitutive::SymTensor {
        let g = self.grid;
        let mut e = [0.0f64; 6];
        for a in 0..g.dim {
            e[a] = self.diag[a][g.cell_index(i, j, k)];
        }
        let c = [i, j, k];
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            if b >= g.dim {
                continue;
            }
            let d = g.off_dims(a, b);
            let mut sum = 0.0;
            for &fa in &[c[a], g.upper_face(a, c[a])] {
                for &fb in &[c[b], g.upper_face(b, c[b])] {
                    let mut q = c;
                    q[a] = fa;
                    q[b] = fb;
                    sum += self.off[p][idx3(&d, q[0], q[1], q[2])];
                }
            }
            // e order: xy -> 3, xz -> 4, yz -> 5
            e[3 + p] = 0.25 * sum;
        }
        crate::constitutive::SymTensor::new(e)
    }
}
