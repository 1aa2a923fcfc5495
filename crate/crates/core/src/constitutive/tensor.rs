use std::ops::{Add, Mul, Neg, Sub};

/// Symmetric 3x3 tensor value (2D usage leaves the z row/column at zero).
///
/// Only the upper triangle is stored, so symmetry is structural. Entry
/// order: `[xx, yy, zz, xy, xz, yz]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor {
    pub e: [f64; 6],
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor { e: [0.0; 6] };

    pub fn new(e: [f64; 6]) -> Self {
        SymTensor { e }
    }

    /// 2D tensor embedded in the x-y plane.
    pub fn sym2(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor {
            e: [xx, yy, 0.0, xy, 0.0, 0.0],
        }
    }

    pub fn sym3(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        SymTensor {
            e: [xx, yy, zz, xy, xz, yz],
        }
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor {
            e: [a, b, c, 0.0, 0.0, 0.0],
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.e[0],
            (1, 1) => self.e[1],
            (2, 2) => self.e[2],
            (0, 1) => self.e[3],
            (0, 2) => self.e[4],
            (1, 2) => self.e[5],
            _ => panic!("tensor index out of range: ({i}, {j})"),
        }
    }

    /// Frobenius norm of the full symmetric matrix.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Frobenius inner product `A : B` (off-diagonal entries count twice).
    pub fn dot(&self, other: &SymTensor) -> f64 {
        let a = &self.e;
        let b = &other.e;
        a[0] * b[0]
            + a[1] * b[1]
            + a[2] * b[2]
            + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().all(|x| x.is_finite())
    }

    /// Conjugation `Q A Q^T` by a 3x3 matrix given in row-major order.
    pub fn rotate(&self, q: &[[f64; 3]; 3]) -> SymTensor {
        let mut full = [[0.0; 3]; 3];
        for (i, row) in full.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.entry(i, j);
            }
        }
        let mut qa = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                qa[i][j] = (0..3).map(|k| q[i][k] * full[k][j]).sum();
            }
        }
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| qa[i][k] * q[j][k]).sum();
            }
        }
        SymTensor::sym3(
            out[0][0], out[1][1], out[2][2], out[0][1], out[0][2], out[1][2],
        )
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    fn add(self, rhs: SymTensor) -> SymTensor {
        let mut e = self.e;
        for (a, b) in e.iter_mut().zip(rhs.e.iter()) {
            *a += b;
        }
        SymTensor { e }
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    fn sub(self, rhs: SymTensor) -> SymTensor {
        let mut e = self.e;
        for (a, b) in e.iter_mut().zip(rhs.e.iter()) {
            *a -= b;
        }
        SymTensor { e }
    }
}

impl Mul<f64> for SymTensor {
    type Output = SymTensor;
    fn mul(self, s: f64) -> SymTensor {
        let mut e = self.e;
        for a in e.iter_mut() {
            *a *= s;
        }
        SymTensor { e }
    }
}

impl Neg for SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        self * -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_counts_off_diagonals_twice() {
        let t = SymTensor::sym2(0.0, 0.0, 1.0);
        assert_eq!(t.norm(), 2f64.sqrt());
        let d = SymTensor::diag(3.0, 4.0, 0.0);
        assert_eq!(d.norm(), 5.0);
    }

    #[test]
    fn norm_zero_iff_zero() {
        assert_eq!(SymTensor::ZERO.norm(), 0.0);
        let t = SymTensor::sym3(0.0, 0.0, 0.0, 0.0, 0.0, 1e-150);
        assert!(t.norm() > 0.0);
    }

    #[test]
    fn reconstruction_is_symmetric() {
        let t = SymTensor::sym3(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.entry(i, j), t.entry(j, i));
            }
        }
    }

    #[test]
    fn rotation_by_identity_is_identity() {
        let t = SymTensor::sym3(1.0, -2.0, 0.5, 0.3, -0.7, 0.1);
        let q = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(t.rotate(&q), t);
    }
}
