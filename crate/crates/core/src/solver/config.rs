use std::fmt;

/// Time-integration controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Base step size; the advective CFL can only shrink it.
    pub dt_initial: f64,
    /// Target advective CFL number in (0, 1).
    pub cfl_target: f64,
    /// Picard sweeps per step (lagged plug viscosity and wall coefficient).
    pub picard_iters: usize,
    /// Early-exit threshold on the max-norm velocity change between sweeps.
    pub picard_tol: f64,
    /// Bound enforced on the post-projection divergence max-norm.
    pub projection_tol: f64,
    /// Optional smooth convective cutoff: `G(|v|^2)` equals 1 below this
    /// value and 0 beyond twice it. `None` disables the cutoff.
    pub convection_truncation_n: Option<f64>,
    pub end_time: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt_initial: 1e-2,
            cfl_target: 0.4,
            picard_iters: 2,
            picard_tol: 1e-9,
            projection_tol: 1e-10,
            convection_truncation_n: None,
            end_time: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |key: &str, v: f64| SolverError::Config(format!("{key}: invalid value {v}"));
        if !(self.dt_initial > 0.0) || !self.dt_initial.is_finite() {
            return Err(bad("dt_initial", self.dt_initial));
        }
        if !(self.cfl_target > 0.0 && self.cfl_target < 1.0) {
            return Err(bad("cfl_target", self.cfl_target));
        }
        if self.picard_iters < 1 {
            return Err(SolverError::Config("picard_iters: must be >= 1".into()));
        }
        if !(self.picard_tol > 0.0) {
            return Err(bad("picard_tol", self.picard_tol));
        }
        if !(self.projection_tol > 0.0) {
            return Err(bad("projection_tol", self.projection_tol));
        }
        if let Some(n) = self.convection_truncation_n {
            if !(n > 0.0) || !n.is_finite() {
                return Err(bad("convection_truncation_n", n));
            }
        }
        if !(self.end_time > 0.0) || !self.end_time.is_finite() {
            return Err(bad("end_time", self.end_time));
        }
        Ok(())
    }
}

/// Smooth convective cutoff: 1 for `u <= n`, 0 for `u >= 2n`, C1 cubic
/// blend in between (|G'| <= 1.5/n).
pub fn convection_cutoff(u: f64, n: f64) -> f64 {
    if u <= n {
        1.0
    } else if u >= 2.0 * n {
        0.0
    } else {
        let t = (u - n) / n;
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    Config(String),
    /// Linear solve stalled (momentum, pressure, or pore-pressure step).
    Linear {
        what: &'static str,
        iters: usize,
        residual: f64,
    },
    Cfl {
        cfl: f64,
    },
    /// Post-step divergence residual exceeded the projection bound.
    DivergenceResidual {
        got: f64,
        bound: f64,
    },
    NonFinite(&'static str),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Config(msg) => write!(f, "solver config: {msg}"),
            SolverError::Linear {
                what,
                iters,
                residual,
            } => write!(
                f,
                "{what} solve stalled after {iters} iterations (residual {residual:.3e})"
            ),
            SolverError::Cfl { cfl } => write!(f, "CFL violation (cfl = {cfl:.3})"),
            SolverError::DivergenceResidual { got, bound } => {
                write!(f, "divergence residual {got:.3e} exceeds bound {bound:.3e}")
            }
            SolverError::NonFinite(what) => write!(f, "non-finite field: {what}"),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<crate::grid::GridError> for SolverError {
    fn from(e: crate::grid::GridError) -> Self {
        match e {
            crate::grid::GridError::NonConvergence { iters, residual } => SolverError::Linear {
                what: "grid operator",
                iters,
                residual,
            },
            crate::grid::GridError::CflViolation { cfl } => SolverError::Cfl { cfl },
            other => SolverError::Config(other.to_string()),
        }
    }
}
