//! Torque laws, regressor filters and parameter adaptation.
//!
//! The differential-cascaded controllers keep the true inertia as the
//! equivalent inertia of the closed loop: the torque is `Y ϑ̂ + W dϑ̂/dt`
//! plus feedback, where `W` is the regressor `Y` passed through the
//! first-order filter `Ẇ = −λc W + Y`. With this choice the composite
//! error `M(q) s − W Δϑ` obeys first-order linear dynamics driven only by
//! the reference torque.

use std::cmp::Ordering;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    coriolis, gravity, inertia, inertia_dot, regressor_ms, Regressor, RegressorVariant, RobotState,
};
use crate::error::ConfigError;
use crate::reference::Feedback;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlLaw {
    /// Variable-gain torque with the gradient law on the filtered regressor.
    DcVariableGain,
    /// Constant-gain torque, regressor without the filter-pole term.
    DcConstantGain,
    /// Constant-gain torque using the inverse-dynamics filtered regressor;
    /// needs no prior bound on the inertia.
    DcConstantGainNoM,
    /// Inverse-dynamics baseline, direct law `−Γ W*ᵀ s`.
    IdDirectA,
    /// Inverse-dynamics baseline, direct law `−Γ W*ᵀ M̂ s`.
    IdDirectB,
    /// Inverse-dynamics baseline, prediction-error law.
    IdIndirect,
}

impl ControlLaw {
    pub const ALL: [ControlLaw; 6] = [
        ControlLaw::DcVariableGain,
        ControlLaw::DcConstantGain,
        ControlLaw::DcConstantGainNoM,
        ControlLaw::IdDirectA,
        ControlLaw::IdDirectB,
        ControlLaw::IdIndirect,
    ];

    pub fn regressor_variant(self) -> RegressorVariant {
        match self {
            ControlLaw::DcConstantGain => RegressorVariant::ConstantGain,
            _ => RegressorVariant::WithFilterPole,
        }
    }

    /// Reference-dynamics feedback that goes with this law.
    pub fn default_feedback(self) -> Feedback {
        match self {
            ControlLaw::DcConstantGain | ControlLaw::DcConstantGainNoM => Feedback::ConstantGain,
            _ => Feedback::VariableGain,
        }
    }

    /// Whether the torque and the composite error are built on `W*` rather than `W`.
    pub fn uses_accel_regressor(self) -> bool {
        !matches!(self, ControlLaw::DcVariableGain | ControlLaw::DcConstantGain)
    }

    pub fn is_inverse_dynamics(self) -> bool {
        matches!(self, ControlLaw::IdDirectA | ControlLaw::IdDirectB | ControlLaw::IdIndirect)
    }
}

/// Constant controller gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    pub lambda_c: f64,
    pub lambda_c_star: f64,
    pub gamma: Matrix3<f64>,
}

impl ControlGains {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if (self.gamma - self.gamma.transpose()).norm() > 1e-12 * self.gamma.norm() {
            return Err(ConfigError::invalid("controller.gamma", "must be symmetric"));
        }
        if self.gamma.cholesky().is_none() {
            return Err(ConfigError::invalid("controller.gamma", "must be positive definite"));
        }
        Ok(())
    }

    pub fn gamma_inverse(&self) -> Matrix3<f64> {
        self.gamma.cholesky().map(|c| c.inverse()).unwrap_or_else(Matrix3::zeros)
    }
}

/// Integrated controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub theta_hat: Vector3<f64>,
    pub w: Regressor,
    pub w_star: Regressor,
    pub tau_f: Vector2<f64>,
}

impl ControllerState {
    /// Filters start at zero.
    pub fn new(theta_hat: Vector3<f64>) -> Self {
        Self { theta_hat, w: Regressor::zeros(), w_star: Regressor::zeros(), tau_f: Vector2::zeros() }
    }

    pub fn add_scaled(&self, other: &Self, h: f64) -> Self {
        Self {
            theta_hat: self.theta_hat + other.theta_hat * h,
            w: self.w + other.w * h,
            w_star: self.w_star + other.w_star * h,
            tau_f: self.tau_f + other.tau_f * h,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta_hat
            .iter()
            .chain(self.w.iter())
            .chain(self.w_star.iter())
            .chain(self.tau_f.iter())
            .all(|v| v.is_finite())
    }
}

/// `s = q̇ − z`.
pub fn sliding_variable(qdot: &Vector2<f64>, z: &Vector2<f64>) -> Vector2<f64> {
    qdot - z
}

/// Right-hand side of the regressor filter `Ẇ = −λc W + Y`.
pub fn filter_rhs(w: &Regressor, y: &Regressor, lambda_c: f64) -> Regressor {
    y - w * lambda_c
}

/// One fixed step of the regressor filter with `Y` held over the step.
pub fn filter_step(w: &Regressor, y: &Regressor, lambda_c: f64, dt: f64) -> Regressor {
    crate::integrate::rk4_step(w, 0.0, dt, |_, w: &Regressor| filter_rhs(w, y, lambda_c))
}

/// `τ̇_f = −λc τ_f + τ`.
pub fn torque_filter_rhs(tau_f: &Vector2<f64>, tau: &Vector2<f64>, lambda_c: f64) -> Vector2<f64> {
    tau - tau_f * lambda_c
}

/// `M̂ ż + Ĉ q̇ + ĝ`, the certainty-equivalence feedforward.
fn feedforward(robot: &RobotState, zdot: &Vector2<f64>, theta_hat: &Vector3<f64>) -> Vector2<f64> {
    inertia(&robot.q, theta_hat) * zdot + coriolis(&robot.q, &robot.qdot, theta_hat) * robot.qdot + gravity(&robot.q)
}

/// Total time derivative of `M(q, ϑ̂)`, including the part due to `dϑ̂/dt`.
pub fn estimated_inertia_rate(robot: &RobotState, theta_hat: &Vector3<f64>, theta_hat_dot: &Vector3<f64>) -> Matrix2<f64> {
    inertia_dot(&robot.q, &robot.qdot, theta_hat) + inertia(&robot.q, theta_hat_dot)
}

/// `τ = −λc M̂ s + M̂ ż + Ĉ q̇ + ĝ − Ṁ(q, q̇; ϑ̂) s + W dϑ̂/dt`.
pub fn torque_variable_gain(
    robot: &RobotState,
    zdot: &Vector2<f64>,
    s: &Vector2<f64>,
    w: &Regressor,
    theta_hat: &Vector3<f64>,
    theta_hat_dot: &Vector3<f64>,
    lambda_c: f64,
) -> Vector2<f64> {
    let mhat = inertia(&robot.q, theta_hat);
    -mhat * s * lambda_c + feedforward(robot, zdot, theta_hat)
        - inertia_dot(&robot.q, &robot.qdot, theta_hat) * s
        + w * theta_hat_dot
}

/// As [`torque_variable_gain`] with constant damping `−λc* s`.
pub fn torque_constant_gain(
    robot: &RobotState,
    zdot: &Vector2<f64>,
    s: &Vector2<f64>,
    w: &Regressor,
    theta_hat: &Vector3<f64>,
    theta_hat_dot: &Vector3<f64>,
    lambda_c_star: f64,
) -> Vector2<f64> {
    -s * lambda_c_star + feedforward(robot, zdot, theta_hat) - inertia_dot(&robot.q, &robot.qdot, theta_hat) * s
        + w * theta_hat_dot
}

/// Constant damping on the `W*` filter; the `M̂ s` derivative term is the
/// total derivative along `ϑ̂`.
pub fn torque_constant_gain_no_inertia(
    robot: &RobotState,
    zdot: &Vector2<f64>,
    s: &Vector2<f64>,
    w_star: &Regressor,
    theta_hat: &Vector3<f64>,
    theta_hat_dot: &Vector3<f64>,
    lambda_c_star: f64,
) -> Vector2<f64> {
    -s * lambda_c_star + feedforward(robot, zdot, theta_hat)
        - estimated_inertia_rate(robot, theta_hat, theta_hat_dot) * s
        + w_star * theta_hat_dot
}

/// Inverse-dynamics reformulation: variable-gain damping on the `W*` filter.
pub fn torque_inverse_dynamics(
    robot: &RobotState,
    zdot: &Vector2<f64>,
    s: &Vector2<f64>,
    w_star: &Regressor,
    theta_hat: &Vector3<f64>,
    theta_hat_dot: &Vector3<f64>,
    lambda_c: f64,
) -> Vector2<f64> {
    let mhat = inertia(&robot.q, theta_hat);
    -mhat * s * lambda_c + feedforward(robot, zdot, theta_hat)
        - estimated_inertia_rate(robot, theta_hat, theta_hat_dot) * s
        + w_star * theta_hat_dot
}

/// Gradient law `dϑ̂/dt = −Γ Wᵀ s`.
pub fn adapt_gradient(w: &Regressor, s: &Vector2<f64>, gamma: &Matrix3<f64>) -> Vector3<f64> {
    -gamma * (w.transpose() * s)
}

/// `W** = W* − Y_M(q, s)`, so that `W** ϑ = W* ϑ − M(q) s`.
pub fn w_star_star(w_star: &Regressor, q: &Vector2<f64>, s: &Vector2<f64>) -> Regressor {
    w_star - regressor_ms(q, s)
}

/// `dϑ̂/dt = −Γ [λc W*ᵀ M̂ s + λc* W**ᵀ s]`.
pub fn adapt_no_inertia(
    w_star: &Regressor,
    w_star_star: &Regressor,
    mhat: &Matrix2<f64>,
    s: &Vector2<f64>,
    gamma: &Matrix3<f64>,
    lambda_c: f64,
    lambda_c_star: f64,
) -> Vector3<f64> {
    -gamma * (w_star.transpose() * (mhat * s) * lambda_c + w_star_star.transpose() * s * lambda_c_star)
}

/// Prediction-error law `dϑ̂/dt = −Γ W*ᵀ (W* ϑ̂ − τ_f)`.
pub fn adapt_indirect(
    w_star: &Regressor,
    theta_hat: &Vector3<f64>,
    tau_f: &Vector2<f64>,
    gamma: &Matrix3<f64>,
) -> Vector3<f64> {
    let e = w_star * theta_hat - tau_f;
    -gamma * (w_star.transpose() * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectVariant {
    Plain,
    InertiaWeighted,
}

/// Direct inverse-dynamics laws `−Γ W*ᵀ s` and `−Γ W*ᵀ M̂ s`.
pub fn adapt_direct_inverse(
    w_star: &Regressor,
    s: &Vector2<f64>,
    mhat: &Matrix2<f64>,
    gamma: &Matrix3<f64>,
    variant: DirectVariant,
) -> Vector3<f64> {
    match variant {
        DirectVariant::Plain => -gamma * (w_star.transpose() * s),
        DirectVariant::InertiaWeighted => -gamma * (w_star.transpose() * (mhat * s)),
    }
}

/// Box projection for the inverse-dynamics baselines. Checked at
/// construction to guarantee `M(q, ϑ̂)` positive definite for every `q`
/// inside the box: `ϑ₂ > 0` and `ϑ₁ ϑ₂ > ϑ₃²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl ParameterBox {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if (0..3).any(|i| !matches!(self.lower[i].partial_cmp(&self.upper[i]), Some(Ordering::Less | Ordering::Equal))) {
            return Err(ConfigError::invalid("controller.projection", "lower bound exceeds upper bound"));
        }
        let t3 = self.lower[2].abs().max(self.upper[2].abs());
        if !(self.lower[1] > 0.0 && self.lower[0] > 0.0 && self.lower[0] * self.lower[1] > t3 * t3) {
            return Err(ConfigError::invalid(
                "controller.projection",
                "box admits an indefinite inertia estimate (need theta2 > 0 and theta1 theta2 > theta3^2)",
            ));
        }
        Ok(())
    }

    pub fn project(&self, theta: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| theta[i].clamp(self.lower[i], self.upper[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{regressor, ManipulatorParams};
    use approx::assert_relative_eq;

    fn sample_robot() -> RobotState {
        RobotState::new(Vector2::new(0.4, -1.1), Vector2::new(0.8, 1.7))
    }

    fn theta() -> Vector3<f64> {
        ManipulatorParams::default().theta().unwrap()
    }

    #[test]
    fn sliding_variable_definition() {
        let v = Vector2::new(0.3, -0.2);
        assert_eq!(sliding_variable(&v, &v), Vector2::zeros());
        assert_eq!(sliding_variable(&Vector2::new(1.0, 0.0), &Vector2::new(0.0, 1.0)), Vector2::new(1.0, -1.0));
    }

    #[test]
    fn filter_decays_homogeneously() {
        let w0 = Regressor::from_fn(|i, j| (i + 2 * j) as f64 - 1.5);
        let (lambda_c, dt) = (10.0, 1e-3);
        let mut w = w0;
        for _ in 0..500 {
            w = filter_step(&w, &Regressor::zeros(), lambda_c, dt);
        }
        // RK4 amplification factor of ẇ = −λc w, raised to the step count.
        let x = -lambda_c * dt;
        let r = 1.0 + x + x * x / 2.0 + x.powi(3) / 6.0 + x.powi(4) / 24.0;
        assert_relative_eq!(w, w0 * r.powi(500), max_relative = 1e-12);
        // Global RK4 error ≈ n (λc dt)⁵ / 120 ≈ 4e-10 relative.
        assert_relative_eq!(w, w0 * (-lambda_c * 0.5f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn filter_settles_at_dc_gain() {
        let y = Regressor::from_fn(|i, j| 1.0 + i as f64 - j as f64);
        let mut w = Regressor::zeros();
        for _ in 0..5000 {
            w = filter_step(&w, &y, 10.0, 1e-3);
        }
        assert_relative_eq!(w, y / 10.0, epsilon = 1e-12);
    }

    #[test]
    fn filter_matches_convolution_quadrature() {
        // W(t) = ∫₀ᵗ e^{−λc (t−σ)} Y(σ) dσ for W(0) = 0, by composite Simpson.
        let lambda_c = 10.0;
        let y_of = |t: f64| Regressor::from_fn(|i, j| ((i + 1) as f64 * t + j as f64).sin());
        let (dt, steps) = (1e-3, 1000);
        let mut w = Regressor::zeros();
        for k in 0..steps {
            let t0 = k as f64 * dt;
            w = crate::integrate::rk4_step(&w, t0, dt, |t, w: &Regressor| filter_rhs(w, &y_of(t), lambda_c));
        }
        let t_end = steps as f64 * dt;
        let n = 2000;
        let h = t_end / n as f64;
        let integrand = |s: f64| y_of(s) * (-lambda_c * (t_end - s)).exp();
        let mut acc = integrand(0.0) + integrand(t_end);
        for i in 1..n {
            acc += integrand(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        assert_relative_eq!(w, acc * (h / 3.0), epsilon = 1e-10);
    }

    #[test]
    fn torques_vanish_for_zero_estimate() {
        let robot = sample_robot();
        let (zdot, s) = (Vector2::new(1.0, -2.0), Vector2::new(0.3, 0.1));
        let (z3, w0) = (Vector3::zeros(), Regressor::zeros());
        assert_eq!(torque_variable_gain(&robot, &zdot, &s, &w0, &z3, &z3, 10.0), Vector2::zeros());
        assert_eq!(torque_inverse_dynamics(&robot, &zdot, &s, &w0, &z3, &z3, 10.0), Vector2::zeros());
        assert_relative_eq!(torque_constant_gain(&robot, &zdot, &s, &w0, &z3, &z3, 70.0), -s * 70.0);
        assert_relative_eq!(torque_constant_gain_no_inertia(&robot, &zdot, &s, &w0, &z3, &z3, 70.0), -s * 70.0);
    }

    #[test]
    fn certainty_equivalence_feedforward() {
        let robot = sample_robot();
        let zdot = Vector2::new(1.0, -2.0);
        let th = theta();
        let w = Regressor::from_fn(|i, j| (i * 3 + j) as f64);
        let tau = torque_variable_gain(&robot, &zdot, &Vector2::zeros(), &w, &th, &Vector3::zeros(), 10.0);
        let expected = inertia(&robot.q, &th) * zdot + coriolis(&robot.q, &robot.qdot, &th) * robot.qdot;
        assert_relative_eq!(tau, expected, epsilon = 1e-12);
        let tau26 = torque_constant_gain(&robot, &zdot, &Vector2::zeros(), &w, &th, &Vector3::zeros(), 70.0);
        assert_relative_eq!(tau26, expected, epsilon = 1e-12);
    }

    #[test]
    fn torque_is_regressor_times_estimate_plus_filter_term() {
        let robot = sample_robot();
        let (zdot, s) = (Vector2::new(1.0, -2.0), Vector2::new(0.3, 0.1));
        let th = Vector3::new(3.0, 1.0, -0.5);
        let thd = Vector3::new(0.2, -0.1, 0.4);
        let w = Regressor::from_fn(|i, j| (i as f64 - j as f64) * 0.3);
        let y = regressor(&robot.q, &robot.qdot, &zdot, &s, 10.0, RegressorVariant::WithFilterPole);
        let tau = torque_variable_gain(&robot, &zdot, &s, &w, &th, &thd, 10.0);
        assert_relative_eq!(tau, y * th + w * thd, epsilon = 1e-12);
        let y27 = regressor(&robot.q, &robot.qdot, &zdot, &s, 10.0, RegressorVariant::ConstantGain);
        let tau = torque_constant_gain(&robot, &zdot, &s, &w, &th, &thd, 70.0);
        assert_relative_eq!(tau, y27 * th + w * thd - s * 70.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_law_examples() {
        let gamma = Matrix3::identity() * 10.0;
        let w = Regressor::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(adapt_gradient(&w, &Vector2::new(1.0, 2.0), &gamma), Vector3::new(-10.0, -20.0, 0.0));
        assert_eq!(adapt_gradient(&w, &Vector2::zeros(), &gamma), Vector3::zeros());
        assert_eq!(adapt_gradient(&Regressor::zeros(), &Vector2::new(1.0, 2.0), &gamma), Vector3::zeros());
    }

    #[test]
    fn no_inertia_law() {
        let gamma = Matrix3::identity() * 10.0;
        let q = Vector2::new(0.2, 0.9);
        let mhat = inertia(&q, &Vector3::new(2.0, 1.0, 0.5));
        let ws = Regressor::from_fn(|i, j| 0.1 * (i + j) as f64 + 0.05);
        let s = Vector2::new(0.4, -0.3);
        let wss = w_star_star(&ws, &q, &s);

        assert_eq!(adapt_no_inertia(&ws, &w_star_star(&ws, &q, &Vector2::zeros()), &mhat, &Vector2::zeros(), &gamma, 10.0, 70.0), Vector3::zeros());

        // W* = 0: the law reduces to +Γ λc* Y_M(q, s)ᵀ s.
        let zero = Regressor::zeros();
        let got = adapt_no_inertia(&zero, &w_star_star(&zero, &q, &s), &mhat, &s, &gamma, 10.0, 70.0);
        assert_relative_eq!(got, gamma * regressor_ms(&q, &s).transpose() * s * 70.0, epsilon = 1e-12);

        let direct = -gamma * (10.0 * ws.transpose() * mhat * s + 70.0 * (ws - regressor_ms(&q, &s)).transpose() * s);
        assert_relative_eq!(adapt_no_inertia(&ws, &wss, &mhat, &s, &gamma, 10.0, 70.0), direct, epsilon = 1e-12);
        // W** ϑ = W* ϑ − M(q, ϑ) s for any ϑ.
        let th = Vector3::new(0.3, -1.0, 2.0);
        assert_relative_eq!(wss * th, ws * th - inertia(&q, &th) * s, epsilon = 1e-12);
    }

    #[test]
    fn indirect_law() {
        let gamma = Matrix3::identity() * 10.0;
        let ws = Regressor::from_fn(|i, j| 0.1 * (i + j) as f64 + 0.05);
        let th = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(adapt_indirect(&ws, &th, &(ws * th), &gamma), Vector3::zeros());
        assert_eq!(adapt_indirect(&Regressor::zeros(), &th, &Vector2::new(1.0, 1.0), &gamma), Vector3::zeros());
        let tau_f = Vector2::new(0.5, -0.5);
        assert_relative_eq!(
            adapt_indirect(&ws, &th, &tau_f, &gamma),
            -gamma * ws.transpose() * (ws * th - tau_f),
            epsilon = 1e-12
        );
    }

    #[test]
    fn direct_inverse_laws() {
        let gamma = Matrix3::identity() * 10.0;
        let ws = Regressor::from_fn(|i, j| 0.1 * (i + j) as f64 + 0.05);
        let s = Vector2::new(0.4, -0.3);
        let mhat = Matrix2::new(3.0, 1.0, 1.0, 2.0);
        for v in [DirectVariant::Plain, DirectVariant::InertiaWeighted] {
            assert_eq!(adapt_direct_inverse(&ws, &Vector2::zeros(), &mhat, &gamma, v), Vector3::zeros());
        }
        let id = Matrix2::identity();
        assert_eq!(
            adapt_direct_inverse(&ws, &s, &id, &gamma, DirectVariant::Plain),
            adapt_direct_inverse(&ws, &s, &id, &gamma, DirectVariant::InertiaWeighted)
        );
        assert_relative_eq!(
            adapt_direct_inverse(&ws, &s, &mhat, &gamma, DirectVariant::InertiaWeighted),
            -gamma * ws.transpose() * mhat * s,
            epsilon = 1e-12
        );
    }

    #[test]
    fn parameter_box() {
        let b = ParameterBox { lower: [1.0, 0.5, -0.6], upper: [20.0, 5.0, 0.6] };
        b.validate().unwrap();
        assert_eq!(b.project(&Vector3::new(0.0, 10.0, 0.1)), Vector3::new(1.0, 5.0, 0.1));
        let bad = ParameterBox { lower: [1.0, 0.5, -1.0], upper: [20.0, 5.0, 1.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gamma_must_be_spd() {
        let mut g = ControlGains { lambda_c: 10.0, lambda_c_star: 70.0, gamma: Matrix3::identity() * 10.0 };
        g.validate().unwrap();
        assert_relative_eq!(g.gamma_inverse(), Matrix3::identity() * 0.1, epsilon = 1e-15);
        g.gamma[(0, 0)] = -1.0;
        assert!(g.validate().is_err());
    }
}
