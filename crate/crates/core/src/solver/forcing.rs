use crate::grid::{idx3, ScalarField, StaggeredGrid, VectorField};

/// Body force per unit mass, as an analytic recipe evaluated on faces.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyForce {
    Zero,
    Constant([f64; 3]),
    /// `b_comp = amp * cos(pi * x_across / l_across)`: a non-gradient
    /// shearing force driving the `comp` direction, varying across `across`.
    TransverseShear {
        comp: usize,
        across: usize,
        amp: f64,
    },
}

impl BodyForce {
    pub fn at(&self, _t: f64, x: [f64; 3], grid: &StaggeredGrid) -> [f64; 3] {
        match self {
            BodyForce::Zero => [0.0; 3],
            BodyForce::Constant(b) => *b,
            BodyForce::TransverseShear { comp, across, amp } => {
                let l = grid.h[*across] * grid.n[*across] as f64;
                let rel = (x[*across] - grid.origin[*across]) / l;
                let mut b = [0.0; 3];
                b[*comp] = amp * (std::f64::consts::PI * rel).cos();
                b
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BodyForce::Zero => true,
            BodyForce::Constant(b) => b.iter().all(|&x| x == 0.0),
            BodyForce::TransverseShear { amp, .. } => *amp == 0.0,
        }
    }

    /// Evaluates the force on the faces of `grid`.
    pub fn field(&self, grid: &StaggeredGrid, t: f64) -> VectorField {
        let mut out = VectorField::zeros(grid);
        if self.is_zero() {
            return out;
        }
        for a in 0..grid.dim {
            let d = grid.face_dims(a);
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        let mut x = [
                            grid.origin[0] + (i as f64 + 0.5) * grid.h[0],
                            grid.origin[1] + (j as f64 + 0.5) * grid.h[1],
                            grid.origin[2] + (k as f64 + 0.5) * grid.h[2],
                        ];
                        x[a] -= 0.5 * grid.h[a];
                        out.comp[a][idx3(&d, i, j, k)] = self.at(t, x, grid)[a];
                    }
                }
            }
        }
        out
    }
}

/// Pore-pressure source term.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Zero,
    /// Gaussian bump `amp * exp(-|x - center|^2 / radius^2)`, constant in
    /// time.
    Blob {
        amp: f64,
        center: [f64; 3],
        radius: f64,
    },
}

impl SourceSpec {
    pub fn field(&self, grid: &StaggeredGrid, _t: f64) -> ScalarField {
        match self {
            SourceSpec::Zero => ScalarField::zeros(grid),
            SourceSpec::Blob {
                amp,
                center,
                radius,
            } => ScalarField::from_fn(grid, |x, y, z| {
                let mut r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                if grid.dim == 3 {
                    r2 += (z - center[2]).powi(2);
                }
                amp * (-r2 / (radius * radius)).exp()
            }),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SourceSpec::Zero) || matches!(self, SourceSpec::Blob { amp, .. } if *amp == 0.0)
    }
}

/// Prescribed hydrostatic-pressure field entering the yield stress and the
/// pore-pressure source.
#[derive(Debug, Clone, PartialEq)]
pub enum PsSpec {
    Constant(f64),
}

impl PsSpec {
    pub fn field(&self, grid: &StaggeredGrid, _t: f64) -> ScalarField {
        match self {
            PsSpec::Constant(c) => {
                let mut f = ScalarField::zeros(grid);
                f.data.fill(*c);
                f
            }
        }
    }

    /// Whether the analytic gradient is identically zero.
    pub fn has_zero_gradient(&self) -> bool {
        matches!(self, PsSpec::Constant(_))
    }
}

/// Time-dependent data of a run: body force, pore source, and the
/// hydrostatic pressure with its analytic gradient when available.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    pub body: BodyForce,
    pub source: SourceSpec,
    pub p_s: PsSpec,
}

impl ForcingSpec {
    pub fn quiescent() -> Self {
        ForcingSpec {
            body: BodyForce::Zero,
            source: SourceSpec::Zero,
            p_s: PsSpec::Constant(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_body_force_fills_faces() {
        let g = StaggeredGrid::boxed(2, &[4, 4], &[1.0, 1.0]).unwrap();
        let b = BodyForce::Constant([1.0, -2.0, 0.0]);
        let f = b.field(&g, 0.0);
        assert!(f.comp[0].iter().all(|&x| x == 1.0));
        assert!(f.comp[1].iter().all(|&x| x == -2.0));
    }

    #[test]
    fn blob_peaks_at_center() {
        let g = StaggeredGrid::boxed(2, &[8, 8], &[1.0, 1.0]).unwrap();
        let s = SourceSpec::Blob {
            amp: 2.0,
            center: [0.5, 0.5, 0.0],
            radius: 0.2,
        };
        let f = s.field(&g, 0.0);
        let peak = f.max();
        assert!(peak > 1.6 && peak <= 2.0, "peak {peak}");
        assert!(f.at(0, 0, 0) < 0.1);
    }
}
