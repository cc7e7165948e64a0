//! Equations of motion of the two-link planar arm moving in a horizontal plane.
//!
//! The arm is written in the standard composite-parameter form
//!
//! ```text
//! M(q) q̈ + C(q, q̇) q̇ + g(q) = τ + τ*
//! ```
//!
//! with `M` and `C` linear in a constant parameter vector `ϑ ∈ R³`, so every
//! term has a regressor `Y` such that the term equals `Y ϑ`. The Coriolis
//! matrix uses the Christoffel factorization, which makes `Ṁ − 2C` exactly
//! skew-symmetric.

use nalgebra::{Matrix2, SMatrix, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;

/// Regressor shape: two joints by three composite parameters.
pub type Regressor = SMatrix<f64, 2, 3>;

/// Physical description of the arm: link masses and lengths under the
/// uniform-density assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManipulatorParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
}

impl ManipulatorParams {
    pub fn new(m1: f64, m2: f64, l1: f64, l2: f64) -> Result<Self, DynamicsError> {
        let params = Self { m1, m2, l1, l2 };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        for (name, value) in [("m1", self.m1), ("m2", self.m2), ("l1", self.l1), ("l2", self.l2)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    pub fn theta(&self) -> Result<Vector3<f64>, DynamicsError> {
        derive_theta(self.m1, self.m2, self.l1, self.l2)
    }
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self { m1: 3.6, m2: 2.7, l1: 1.8, l2: 1.8 }
    }
}

/// Joint positions and velocities of the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub q: Vector2<f64>,
    pub qdot: Vector2<f64>,
}

impl RobotState {
    pub fn new(q: Vector2<f64>, qdot: Vector2<f64>) -> Self {
        Self { q, qdot }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }
}

/// Composite parameters of a uniform-density two-link chain:
/// `(m1 lc1² + I1 + m2 l1², m2 lc2² + I2, m2 l1 lc2)` with `lc = l/2`, `I = m l²/12`.
pub fn derive_theta(m1: f64, m2: f64, l1: f64, l2: f64) -> Result<Vector3<f64>, DynamicsError> {
    ManipulatorParams { m1, m2, l1, l2 }.validate()?;
    let (lc1, lc2) = (0.5 * l1, 0.5 * l2);
    let (i1, i2) = (m1 * l1 * l1 / 12.0, m2 * l2 * l2 / 12.0);
    Ok(Vector3::new(
        m1 * lc1 * lc1 + i1 + m2 * l1 * l1,
        m2 * lc2 * lc2 + i2,
        m2 * l1 * lc2,
    ))
}

pub fn inertia(q: &Vector2<f64>, theta: &Vector3<f64>) -> Matrix2<f64> {
    let c2 = q[1].cos();
    let off = theta[1] + theta[2] * c2;
    Matrix2::new(theta[0] + theta[1] + 2.0 * theta[2] * c2, off, off, theta[1])
}

pub fn coriolis(q: &Vector2<f64>, qdot: &Vector2<f64>, theta: &Vector3<f64>) -> Matrix2<f64> {
    let h = theta[2] * q[1].sin();
    Matrix2::new(-h * qdot[1], -h * (qdot[0] + qdot[1]), h * qdot[0], 0.0)
}

/// Gravity torque. Identically zero: the arm moves in a horizontal plane.
pub fn gravity(_q: &Vector2<f64>) -> Vector2<f64> {
    Vector2::zeros()
}

/// Analytic `Ṁ = (∂M/∂q2) q̇2`.
pub fn inertia_dot(q: &Vector2<f64>, qdot: &Vector2<f64>, theta: &Vector3<f64>) -> Matrix2<f64> {
    let h = theta[2] * q[1].sin() * qdot[1];
    Matrix2::new(-2.0 * h, -h, -h, 0.0)
}

pub fn kinetic_energy(state: &RobotState, theta: &Vector3<f64>) -> f64 {
    0.5 * state.qdot.dot(&(inertia(&state.q, theta) * state.qdot))
}

/// `q̈ = M⁻¹ (τ + τ* − C q̇ − g)`.
pub fn forward_dynamics(
    state: &RobotState,
    tau: &Vector2<f64>,
    tau_star: &Vector2<f64>,
    theta: &Vector3<f64>,
) -> Result<Vector2<f64>, DynamicsError> {
    let m = inertia(&state.q, theta);
    let rhs = tau + tau_star - coriolis(&state.q, &state.qdot, theta) * state.qdot - gravity(&state.q);
    m.cholesky()
        .map(|chol| chol.solve(&rhs))
        .ok_or(DynamicsError::SingularInertia)
}

/// The two regressor definitions used by the filtered-regressor laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorVariant {
    /// `M ż + C q̇ + g − Ṁ s − λc M s`
    WithFilterPole,
    /// `M ż + C q̇ + g − Ṁ s`
    ConstantGain,
}

/// Regressor of `M(q) a`.
pub fn regressor_ms(q: &Vector2<f64>, a: &Vector2<f64>) -> Regressor {
    let c2 = q[1].cos();
    Regressor::new(
        a[0], a[0] + a[1], c2 * (2.0 * a[0] + a[1]), //
        0.0, a[0] + a[1], c2 * a[0],
    )
}

/// Regressor of `C(q, q̇) b`; only the third parameter enters.
fn regressor_coriolis(q: &Vector2<f64>, qdot: &Vector2<f64>, b: &Vector2<f64>) -> Regressor {
    let s2 = q[1].sin();
    let mut y = Regressor::zeros();
    y[(0, 2)] = -s2 * (qdot[1] * b[0] + (qdot[0] + qdot[1]) * b[1]);
    y[(1, 2)] = s2 * qdot[0] * b[0];
    y
}

/// Regressor of `Ṁ(q, q̇) b`.
fn regressor_inertia_dot(q: &Vector2<f64>, qdot: &Vector2<f64>, b: &Vector2<f64>) -> Regressor {
    let h = q[1].sin() * qdot[1];
    let mut y = Regressor::zeros();
    y[(0, 2)] = -h * (2.0 * b[0] + b[1]);
    y[(1, 2)] = -h * b[0];
    y
}

/// Regressor `Y(q, q̇, z, ż)` of the filtered-regressor controllers. The gravity
/// term contributes no column since `g ≡ 0`.
pub fn regressor(
    q: &Vector2<f64>,
    qdot: &Vector2<f64>,
    zdot: &Vector2<f64>,
    s: &Vector2<f64>,
    lambda_c: f64,
    variant: RegressorVariant,
) -> Regressor {
    let y = regressor_ms(q, zdot) + regressor_coriolis(q, qdot, qdot) - regressor_inertia_dot(q, qdot, s);
    match variant {
        RegressorVariant::WithFilterPole => y - regressor_ms(q, s) * lambda_c,
        RegressorVariant::ConstantGain => y,
    }
}

/// Inverse-dynamics regressor: `Y*(q, q̇, q̈) ϑ = M q̈ + C q̇ + g`.
pub fn regressor_accel(q: &Vector2<f64>, qdot: &Vector2<f64>, qddot: &Vector2<f64>) -> Regressor {
    regressor_ms(q, qddot) + regressor_coriolis(q, qdot, qdot)
}

/// Smallest and largest eigenvalue of a symmetric 2×2 matrix, in closed form.
pub fn sym_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let radius = half_diff.hypot(off);
    (mean - radius, mean + radius)
}

pub fn is_positive_definite(m: &Matrix2<f64>) -> bool {
    m[(0, 0)] > 0.0 && m.determinant() > 0.0
}
