//! Pointwise constitutive laws.
//!
//! The bulk response is a Bingham-type law whose yield stress is activated
//! by the gap between a prescribed pressure `p_s` and the pore pressure
//! `p_f`. It is implemented in every equivalent description: the two-branch
//! form, the implicit positive-part form, the two scalar constraints, and
//! the smooth regularized closure used by the solver. The same structure is
//! mirrored on the boundary by the stick-slip wall law.

mod tensor;

pub use tensor::SymTensor;

use std::fmt;

/// Default absolute tolerance for the scalar constraint checks, scaled by
/// `max(1, |S|, tau)`. Sits well above double round-off for entries up to 1e3.
pub const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstitutiveError {
    /// An input value was NaN or infinite.
    NonFinite(&'static str),
    /// `|D| = 0`: the stress is set-valued, `stress_from_strain_exact` does
    /// not apply.
    RigidState,
    /// `|v_tau| = 0`: the traction is set-valued, `slip_traction_exact`
    /// does not apply.
    StickState,
    /// `gamma_star = 0`: the slip velocity is not determined by the
    /// inverse law.
    ZeroFriction,
}

impl fmt::Display for ConstitutiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstitutiveError::NonFinite(what) => write!(f, "non-finite input: {what}"),
            ConstitutiveError::RigidState => {
                write!(f, "rigid state: stress not uniquely determined")
            }
            ConstitutiveError::StickState => {
                write!(f, "stick state: traction not uniquely determined")
            }
            ConstitutiveError::ZeroFriction => {
                write!(f, "gamma_star = 0: slip velocity not determined")
            }
        }
    }
}

impl std::error::Error for ConstitutiveError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ParamError {}

/// Scalar constitutive constants.
///
/// `nu_star` is the viscosity coefficient; the law always pairs it as
/// `2 * nu_star`, kept explicit. `epsilon` is the regularization scale of
/// the smooth closure (`1/n` in the approximation-parameter convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Density (kg/m^3), > 0.
    pub rho_star: f64,
    /// Viscosity coefficient (Pa s), > 0.
    pub nu_star: f64,
    /// Yield slope (dimensionless), >= 0.
    pub q_star: f64,
    /// Pore-pressure diffusivity (m^2/s), >= 0.
    pub k_pore: f64,
    /// Slip threshold (Pa), > 0.
    pub s_star: f64,
    /// Slip friction (Pa s/m), >= 0.
    pub gamma_star: f64,
    /// Regularization scale, > 0.
    pub epsilon: f64,
}

impl MaterialParams {
    pub fn new(
        rho_star: f64,
        nu_star: f64,
        q_star: f64,
        k_pore: f64,
        s_star: f64,
        gamma_star: f64,
        epsilon: f64,
    ) -> Result<Self, ParamError> {
        let p = MaterialParams {
            rho_star,
            nu_star,
            q_star,
            k_pore,
            s_star,
            gamma_star,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let checks: [(&'static str, f64, bool); 7] = [
            ("rho_star", self.rho_star, self.rho_star > 0.0),
            ("nu_star", self.nu_star, self.nu_star > 0.0),
            ("q_star", self.q_star, self.q_star >= 0.0),
            ("k_pore", self.k_pore, self.k_pore >= 0.0),
            ("s_star", self.s_star, self.s_star > 0.0),
            ("gamma_star", self.gamma_star, self.gamma_star >= 0.0),
            ("epsilon", self.epsilon, self.epsilon > 0.0),
        ];
        for (field, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err(ParamError {
                    field,
                    message: format!("sign constraint violated (got {value})"),
                });
            }
        }
        Ok(())
    }
}

impl Default for MaterialParams {
    /// The normalized constants: rho* = 2 nu* = gamma* = K = q* = 1, with
    /// s* = 1 and epsilon = 1e-2.
    fn default() -> Self {
        MaterialParams {
            rho_star: 1.0,
            nu_star: 0.5,
            q_star: 1.0,
            k_pore: 1.0,
            s_star: 1.0,
            gamma_star: 1.0,
            epsilon: 1e-2,
        }
    }
}

/// Wall-trace triple used by the boundary law: tangential velocity, the
/// negative tangential traction `s = -(S n)_tau`, and `z = s - gamma* v_tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryVectors {
    pub v_tau: [f64; 3],
    pub s_vec: [f64; 3],
    pub z_vec: [f64; 3],
}

impl BoundaryVectors {
    /// Builds the triple from a velocity/traction pair, checking that both
    /// lie in the tangent plane of `normal`.
    pub fn new(
        v_tau: [f64; 3],
        s_vec: [f64; 3],
        gamma_star: f64,
        normal: [f64; 3],
    ) -> Result<Self, ConstitutiveError> {
        if !(v_tau.iter().chain(s_vec.iter()).all(|x| x.is_finite())) {
            return Err(ConstitutiveError::NonFinite("boundary vectors"));
        }
        let scale = vec_norm(&v_tau).max(vec_norm(&s_vec)).max(1.0);
        if dot3(&v_tau, &normal).abs() > 1e-12 * scale
            || dot3(&s_vec, &normal).abs() > 1e-12 * scale
        {
            return Err(ConstitutiveError::NonFinite(
                "boundary vector not tangent to the wall",
            ));
        }
        let z_vec = [
            s_vec[0] - gamma_star * v_tau[0],
            s_vec[1] - gamma_star * v_tau[1],
            s_vec[2] - gamma_star * v_tau[2],
        ];
        Ok(BoundaryVectors { v_tau, s_vec, z_vec })
    }
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn vec_norm(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Yield stress `tau = q* (p_s - p_f)^+`.
pub fn yield_stress(p_s_val: f64, p_f_val: f64, q_star: f64) -> Result<f64, ConstitutiveError> {
    if !p_s_val.is_finite() || !p_f_val.is_finite() || !q_star.is_finite() {
        return Err(ConstitutiveError::NonFinite("yield_stress argument"));
    }
    Ok(q_star * positive_part(p_s_val - p_f_val))
}

/// Flowing branch of the two-branch law: `S = tau D/|D| + 2 nu* D`.
///
/// Defined only for `D != 0`; the rigid branch is set-valued (`|S| <= tau`)
/// and must be handled by the caller.
pub fn stress_from_strain_exact(
    strain: &SymTensor,
    tau: f64,
    nu_star: f64,
) -> Result<SymTensor, ConstitutiveError> {
    if !strain.is_finite() || !tau.is_finite() || !nu_star.is_finite() {
        return Err(ConstitutiveError::NonFinite("stress_from_strain argument"));
    }
    let norm = strain.norm();
    if norm == 0.0 {
        return Err(ConstitutiveError::RigidState);
    }
    Ok(*strain * (tau / norm + 2.0 * nu_star))
}

/// Implicit positive-part form: `2 nu* D = (|S| - tau)^+ / |S| * S`, with the
/// zero-tensor convention at `S = 0` (the 0/0 limit of the prefactor).
pub fn strain_from_stress_exact(
    stress: &SymTensor,
    tau: f64,
    nu_star: f64,
) -> Result<SymTensor, ConstitutiveError> {
    if !stress.is_finite() || !tau.is_finite() || !nu_star.is_finite() {
        return Err(ConstitutiveError::NonFinite("strain_from_stress argument"));
    }
    let norm = stress.norm();
    if norm == 0.0 {
        return Ok(SymTensor::ZERO);
    }
    let factor = positive_part(norm - tau) / norm / (2.0 * nu_star);
    Ok(*stress * factor)
}

/// Regularized extra stress `Z = tau D / (|D| + epsilon)`.
///
/// Smooth and bounded: `|Z| < tau` strictly whenever `tau > 0`.
pub fn regularized_stress_extra(
    strain: &SymTensor,
    p_s_val: f64,
    p_f_val: f64,
    params: &MaterialParams,
) -> SymTensor {
    let tau = params.q_star * positive_part(p_s_val - p_f_val);
    let norm = strain.norm();
    *strain * (tau / (norm + params.epsilon))
}

/// Checks the two scalar constraints `|Z| <= tau` and `Z:D >= tau |D|` with
/// `Z = S - 2 nu* D`. Returns the pass flag and the residuals
/// `(|Z| - tau, tau |D| - Z:D)`.
pub fn check_scalar_constraints(
    stress: &SymTensor,
    strain: &SymTensor,
    tau: f64,
    nu_star: f64,
    tol: f64,
) -> (bool, [f64; 2]) {
    let z = *stress - *strain * (2.0 * nu_star);
    let r1 = z.norm() - tau;
    let r2 = tau * strain.norm() - z.dot(strain);
    (r1 <= tol && r2 <= tol, [r1, r2])
}

/// Slipping branch of the wall law: `s = s* v_tau/|v_tau| + gamma* v_tau`.
pub fn slip_traction_exact(
    v_tau: &[f64; 3],
    s_star: f64,
    gamma_star: f64,
) -> Result<[f64; 3], ConstitutiveError> {
    if !v_tau.iter().all(|x| x.is_finite()) {
        return Err(ConstitutiveError::NonFinite("slip_traction argument"));
    }
    let norm = vec_norm(v_tau);
    if norm == 0.0 {
        return Err(ConstitutiveError::StickState);
    }
    let factor = s_star / norm + gamma_star;
    Ok([v_tau[0] * factor, v_tau[1] * factor, v_tau[2] * factor])
}

/// Inverse wall law: `gamma* v_tau = (|s| - s*)^+ / |s| * s`, zero-vector
/// convention at `s = 0`.
pub fn slip_velocity_exact(
    s_vec: &[f64; 3],
    s_star: f64,
    gamma_star: f64,
) -> Result<[f64; 3], ConstitutiveError> {
    if !s_vec.iter().all(|x| x.is_finite()) {
        return Err(ConstitutiveError::NonFinite("slip_velocity argument"));
    }
    if gamma_star == 0.0 {
        return Err(ConstitutiveError::ZeroFriction);
    }
    let norm = vec_norm(s_vec);
    if norm == 0.0 {
        return Ok([0.0; 3]);
    }
    let factor = positive_part(norm - s_star) / norm / gamma_star;
    Ok([s_vec[0] * factor, s_vec[1] * factor, s_vec[2] * factor])
}

/// Regularized wall traction `z = s* v_tau / (|v_tau| + epsilon)`;
/// magnitude strictly below `s*`.
pub fn regularized_slip_traction(v_tau: &[f64; 3], s_star: f64, epsilon: f64) -> [f64; 3] {
    let factor = s_star / (vec_norm(v_tau) + epsilon);
    [v_tau[0] * factor, v_tau[1] * factor, v_tau[2] * factor]
}

/// Checks `|z| <= s*` and `z . v_tau >= s* |v_tau|` with
/// `z = s - gamma* v_tau`. Returns the pass flag and the residuals.
pub fn check_slip_constraints(
    s_vec: &[f64; 3],
    v_tau: &[f64; 3],
    s_star: f64,
    gamma_star: f64,
    tol: f64,
) -> (bool, [f64; 2]) {
    let z = [
        s_vec[0] - gamma_star * v_tau[0],
        s_vec[1] - gamma_star * v_tau[1],
        s_vec[2] - gamma_star * v_tau[2],
    ];
    let r1 = vec_norm(&z) - s_star;
    let r2 = s_star * vec_norm(v_tau) - dot3(&z, v_tau);
    (r1 <= tol && r2 <= tol, [r1, r2])
}

/// Defect of the monotonicity inequality of the regularized closure:
///
/// `(Z - Zhat):(D - Dhat) - tau eps (|D| - |Dhat|)^2 / ((|D|+eps)(|Dhat|+eps))`
///
/// with `Z`, `Zhat` from [`regularized_stress_extra`]. Non-negative up to
/// round-off for every input.
pub fn monotonicity_gap(
    d1: &SymTensor,
    d2: &SymTensor,
    p_s_val: f64,
    p_f_val: f64,
    params: &MaterialParams,
) -> f64 {
    let tau = params.q_star * positive_part(p_s_val - p_f_val);
    let eps = params.epsilon;
    let z1 = regularized_stress_extra(d1, p_s_val, p_f_val, params);
    let z2 = regularized_stress_extra(d2, p_s_val, p_f_val, params);
    let lhs = (z1 - z2).dot(&(*d1 - *d2));
    let n1 = d1.norm();
    let n2 = d2.norm();
    let rhs = tau * eps * (n1 - n2) * (n1 - n2) / ((n1 + eps) * (n2 + eps));
    lhs - rhs
}
