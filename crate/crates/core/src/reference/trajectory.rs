use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Desired joint position, velocity and acceleration at one instant. This is
/// all the degree-reduced reference realizations are allowed to see.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredState {
    pub pos: Vector2<f64>,
    pub vel: Vector2<f64>,
    pub acc: Vector2<f64>,
}

/// Desired joint trajectory with analytic derivatives of every order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// `q_d = amplitude · sin(omega t)`, per joint.
    Sinusoid { amplitude: [f64; 2], omega: f64 },
    Constant { position: [f64; 2] },
}

impl Default for Trajectory {
    fn default() -> Self {
        let a = std::f64::consts::FRAC_PI_3;
        Trajectory::Sinusoid { amplitude: [a, a], omega: std::f64::consts::PI }
    }
}

impl Trajectory {
    /// `d^order q_d / dt^order` at `t`.
    pub fn derivative(&self, t: f64, order: u32) -> Vector2<f64> {
        match self {
            Trajectory::Sinusoid { amplitude, omega } => {
                let v = omega.powi(order as i32) * (omega * t + order as f64 * FRAC_PI_2).sin();
                Vector2::new(amplitude[0] * v, amplitude[1] * v)
            }
            Trajectory::Constant { position } => {
                if order == 0 {
                    Vector2::new(position[0], position[1])
                } else {
                    Vector2::zeros()
                }
            }
        }
    }

    pub fn sample(&self, t: f64) -> DesiredState {
        DesiredState {
            pos: self.derivative(t, 0),
            vel: self.derivative(t, 1),
            acc: self.derivative(t, 2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sinusoid_derivatives_match_finite_differences() {
        let traj = Trajectory::default();
        let h = 1e-5;
        for &t in &[0.0, 0.37, 1.9] {
            for k in 0..4 {
                let fd = (traj.derivative(t + h, k) - traj.derivative(t - h, k)) / (2.0 * h);
                assert_relative_eq!(fd, traj.derivative(t, k + 1), epsilon = 1e-6 * 10f64.powi(k as i32));
            }
        }
    }

    #[test]
    fn constant_has_no_motion() {
        let traj = Trajectory::Constant { position: [0.5, -0.2] };
        let d = traj.sample(3.0);
        assert_eq!(d.pos, Vector2::new(0.5, -0.2));
        assert_eq!(d.vel, Vector2::zeros());
        assert_eq!(d.acc, Vector2::zeros());
    }
}
