//! Cartesian staggered (MAC) grid storage and discrete operators.
//!
//! Scalars live at cell centers, vector component `a` on faces normal to
//! axis `a`, and symmetric-tensor off-diagonals on the edges (2D: nodes)
//! shared by the two axes of the entry. Axes can independently be walled
//! (impermeable, homogeneous Neumann for scalars) or periodic.

mod fields;
mod ops;
mod poisson;
mod transport;

pub use fields::{ScalarField, SymTensorField, VectorField};
pub use poisson::{cg, CgOutcome, PoissonSolve};

use std::fmt;

/// Guard against runaway allocations.
pub const MAX_CELLS: usize = 1 << 24;

/// Off-diagonal tensor entry axis pairs, in storage order.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    InvalidGrid(String),
    NonConvergence { iters: usize, residual: f64 },
    CflViolation { cfl: f64 },
    ShapeMismatch(&'static str),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            GridError::NonConvergence { iters, residual } => {
                write!(f, "linear solver stalled after {iters} iterations (residual {residual:.3e})")
            }
            GridError::CflViolation { cfl } => {
                write!(f, "advective CFL violated (cfl = {cfl:.3})")
            }
            GridError::ShapeMismatch(what) => write!(f, "field/grid shape mismatch: {what}"),
        }
    }
}

impl std::error::Error for GridError {}

/// Uniform staggered grid over an axis-aligned box.
///
/// For `dim == 2` the z axis is collapsed to a single inactive layer with
/// unit spacing, so cell volumes stay `h[0] * h[1] * h[2]` in both cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaggeredGrid {
    pub dim: usize,
    pub n: [usize; 3],
    pub h: [f64; 3],
    pub origin: [f64; 3],
    pub periodic: [bool; 3],
}

impl StaggeredGrid {
    pub fn new(
        dim: usize,
        n: &[usize],
        extent: &[f64],
        origin: &[f64],
        periodic: &[bool],
    ) -> Result<Self, GridError> {
        if dim != 2 && dim != 3 {
            return Err(GridError::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n.len() < dim || extent.len() < dim || origin.len() < dim || periodic.len() < dim {
            return Err(GridError::InvalidGrid("per-axis arrays shorter than dim".into()));
        }
        let mut nn = [1usize; 3];
        let mut hh = [1.0f64; 3];
        let mut oo = [0.0f64; 3];
        let mut pp = [false; 3];
        for a in 0..dim {
            if n[a] < 2 {
                return Err(GridError::InvalidGrid(format!(
                    "axis {a}: need at least 2 cells, got {}",
                    n[a]
                )));
            }
            if !(extent[a] > 0.0) || !extent[a].is_finite() {
                return Err(GridError::InvalidGrid(format!(
                    "axis {a}: extent must be positive, got {}",
                    extent[a]
                )));
            }
            nn[a] = n[a];
            hh[a] = extent[a] / n[a] as f64;
            oo[a] = origin[a];
            pp[a] = periodic[a];
        }
        let total = nn
            .iter()
            .try_fold(1usize, |acc, &b| acc.checked_mul(b))
            .unwrap_or(usize::MAX);
        if total > MAX_CELLS {
            return Err(GridError::InvalidGrid(format!(
                "cell count {total} exceeds maximum {MAX_CELLS}"
            )));
        }
        Ok(StaggeredGrid {
            dim,
            n: nn,
            h: hh,
            origin: oo,
            periodic: pp,
        })
    }

    /// Box grid with walls on every side.
    pub fn boxed(dim: usize, n: &[usize], extent: &[f64]) -> Result<Self, GridError> {
        let d = dim.min(3);
        StaggeredGrid::new(dim, n, extent, &[0.0; 3][..d], &[false; 3][..d])
    }

    pub fn cells(&self) -> usize {
        self.n.iter().product()
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    /// Coordinates of the center of cell (i, j, k).
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h[0],
            self.origin[1] + (j as f64 + 0.5) * self.h[1],
            self.origin[2] + (k as f64 + 0.5) * self.h[2],
        ]
    }

    /// Dimensions of the face array for vector component `a`.
    pub fn face_dims(&self, a: usize) -> [usize; 3] {
        let mut d = self.n;
        if !self.periodic[a] {
            d[a] += 1;
        }
        d
    }

    /// Dimensions of the off-diagonal site array for the axis pair (a, b).
    pub fn off_dims(&self, a: usize, b: usize) -> [usize; 3] {
        let mut d = self.n;
        if !self.periodic[a] {
            d[a] += 1;
        }
        if !self.periodic[b] {
            d[b] += 1;
        }
        d
    }

    /// Number of faces for component `a`.
    pub fn face_count(&self, a: usize) -> usize {
        self.face_dims(a).iter().product()
    }

    /// Index of the lower face of cell `c` along axis `a` (same numbering).
    #[inline]
    pub fn lower_face(&self, _a: usize, c: usize) -> usize {
        c
    }

    /// Index of the upper face of cell `c` along axis `a`.
    #[inline]
    pub fn upper_face(&self, a: usize, c: usize) -> usize {
        if self.periodic[a] {
            (c + 1) % self.n[a]
        } else {
            c + 1
        }
    }

    /// Whether face index `f` along axis `a` sits on a wall.
    #[inline]
    pub fn is_wall_face(&self, a: usize, f: usize) -> bool {
        !self.periodic[a] && (f == 0 || f == self.n[a])
    }
}

#[inline]
pub(crate) fn idx3(dims: &[usize; 3], i: usize, j: usize, k: usize) -> usize {
    i + dims[0] * (j + dims[1] * k)
}
