//! Fixed-step closed-loop simulation of plant, reference dynamics and
//! controller.
//!
//! Two sampling modes are provided. `ZeroOrderHold` evaluates the control
//! law once per control period and holds `τ`, `Y`, `Y*` and `dϑ̂/dt` while the
//! plant, the filters, the estimate and the reference state are advanced by
//! RK4 substeps of `dt_plant`; the reference right-hand side is re-evaluated
//! at every stage. `Continuous` re-evaluates the whole control law at every
//! RK4 stage, which integrates the continuous-time closed loop and is what
//! the structural identities are checked against.

pub mod diagnostics;
mod log;
mod tau_star;

pub use log::{Abort, LogRow, SimLog, CSV_HEADER};
pub use tau_star::TauStar;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::control::{
    adapt_direct_inverse, adapt_gradient, adapt_indirect, adapt_no_inertia, filter_rhs, sliding_variable,
    torque_constant_gain, torque_constant_gain_no_inertia, torque_filter_rhs, torque_inverse_dynamics,
    torque_variable_gain, w_star_star, ControlGains, ControlLaw, ControllerState, DirectVariant, ParameterBox,
};
use crate::dynamics::{
    forward_dynamics, inertia, is_positive_definite, regressor, regressor_accel, ManipulatorParams, Regressor,
    RobotState,
};
use crate::error::{ConfigError, SimError};
use crate::integrate::{try_rk4_step, OdeState};
use crate::reference::{init_reference, recover_z, reference_rhs, DesiredState, ReferenceConfig, ReferenceState, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    ZeroOrderHold,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub plant: ManipulatorParams,
    /// Initial joint position; `None` starts on the desired trajectory.
    pub q0: Option<Vector2<f64>>,
    pub qdot0: Option<Vector2<f64>>,
    pub law: ControlLaw,
    pub gains: ControlGains,
    pub theta_hat0: Vector3<f64>,
    pub projection: Option<ParameterBox>,
    pub reference: ReferenceConfig,
    pub trajectory: Trajectory,
    pub tau_star: TauStar,
    pub dt_control: f64,
    pub dt_plant: f64,
    pub t_end: f64,
    pub sampling: Sampling,
    pub log_every: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Number of plant substeps per control period.
    pub fn substeps(&self) -> usize {
        (self.dt_control / self.dt_plant).round() as usize
    }

    pub fn control_steps(&self) -> usize {
        (self.t_end / self.dt_control).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.plant.validate().map_err(|e| ConfigError::invalid("plant", e.to_string()))?;
        if !(self.dt_control > 0.0 && self.dt_plant > 0.0 && self.dt_plant <= self.dt_control) {
            return Err(ConfigError::invalid("sim.dt_plant", "need 0 < dt_plant <= dt_control"));
        }
        let ratio = self.dt_control / self.dt_plant;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(ConfigError::invalid("sim.dt_plant", "dt_control must be an integer multiple of dt_plant"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(ConfigError::invalid("sim.t_end", "must be finite and non-negative"));
        }
        if self.log_every == 0 {
            return Err(ConfigError::invalid("sim.log_every", "must be at least 1"));
        }
        if self.reference.lambda_c != self.gains.lambda_c || self.reference.lambda_c_star != self.gains.lambda_c_star {
            return Err(ConfigError::invalid("controller.lambda_c", "reference and controller gains disagree"));
        }
        self.gains.validate()?;
        self.reference.validate()?;
        self.tau_star.validate().map_err(|e| ConfigError::invalid("tau_star", e))?;
        if let Some(b) = &self.projection {
            if !self.law.is_inverse_dynamics() {
                return Err(ConfigError::invalid(
                    "controller.projection",
                    "projection is only available for the inverse-dynamics baselines",
                ));
            }
            b.validate()?;
        }
        if self.law == ControlLaw::DcConstantGain {
            let theta = self.plant.theta().map_err(|e| ConfigError::invalid("plant", e.to_string()))?;
            let check = diagnostics::gain_condition_check(self.gains.lambda_c_star, self.gains.lambda_c, &theta, 0.01);
            if !check.satisfied {
                return Err(ConfigError::GainCondition {
                    lambda_c_star: self.gains.lambda_c_star,
                    threshold: check.threshold,
                });
            }
        }
        Ok(())
    }
}

/// Full integrated state of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopState {
    pub robot: RobotState,
    pub reference: ReferenceState,
    pub ctrl: ControllerState,
}

impl OdeState for LoopState {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        Self {
            robot: OdeState::add_scaled(&self.robot, &rate.robot, h),
            reference: self.reference.add_scaled(&rate.reference, h),
            ctrl: self.ctrl.add_scaled(&rate.ctrl, h),
        }
    }
}

impl LoopState {
    pub fn is_finite(&self) -> bool {
        self.robot.is_finite() && self.reference.is_finite() && self.ctrl.is_finite()
    }
}

/// Everything the control law produces at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutputs {
    pub desired: DesiredState,
    pub mhat: Matrix2<f64>,
    pub z: Vector2<f64>,
    pub zdot: Vector2<f64>,
    pub s: Vector2<f64>,
    pub theta_hat_dot: Vector3<f64>,
    pub y: Regressor,
    pub y_star: Regressor,
    pub tau: Vector2<f64>,
    pub tau_star: Vector2<f64>,
    pub qddot: Vector2<f64>,
}

pub struct Engine<'a> {
    cfg: &'a SimConfig,
    theta: Vector3<f64>,
}

impl<'a> Engine<'a> {
    pub fn new(cfg: &'a SimConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let theta = cfg.plant.theta().map_err(|e| ConfigError::invalid("plant", e.to_string()))?;
        Ok(Self { cfg, theta })
    }

    pub fn config(&self) -> &SimConfig {
        self.cfg
    }

    /// True parameter vector of the simulated plant; diagnostics only.
    pub fn true_theta(&self) -> Vector3<f64> {
        self.theta
    }

    pub fn initial_state(&self) -> Result<LoopState, SimError> {
        let desired = self.cfg.trajectory.sample(0.0);
        let robot = RobotState::new(
            self.cfg.q0.unwrap_or(desired.pos),
            self.cfg.qdot0.unwrap_or(desired.vel),
        );
        let ctrl = ControllerState::new(self.cfg.theta_hat0);
        let mhat = inertia(&robot.q, &ctrl.theta_hat);
        let reference = init_reference(&robot, &desired, &mhat, &self.cfg.reference)?;
        Ok(LoopState { robot, reference, ctrl })
    }

    /// Evaluate the control law at `(t, x)`.
    pub fn outputs(&self, t: f64, x: &LoopState) -> Result<ControlOutputs, SimError> {
        let cfg = self.cfg;
        let gains = &cfg.gains;
        let robot = &x.robot;
        let ctrl = &x.ctrl;
        let desired = cfg.trajectory.sample(t);
        let mhat = inertia(&robot.q, &ctrl.theta_hat);
        let (z, zdot) = recover_z(&x.reference, robot, &desired, &mhat, &cfg.reference)?;
        let s = sliding_variable(&robot.qdot, &z);

        let theta_hat_dot = match cfg.law {
            ControlLaw::DcVariableGain | ControlLaw::DcConstantGain => adapt_gradient(&ctrl.w, &s, &gains.gamma),
            ControlLaw::DcConstantGainNoM => adapt_no_inertia(
                &ctrl.w_star,
                &w_star_star(&ctrl.w_star, &robot.q, &s),
                &mhat,
                &s,
                &gains.gamma,
                gains.lambda_c,
                gains.lambda_c_star,
            ),
            ControlLaw::IdDirectA => adapt_direct_inverse(&ctrl.w_star, &s, &mhat, &gains.gamma, DirectVariant::Plain),
            ControlLaw::IdDirectB => {
                adapt_direct_inverse(&ctrl.w_star, &s, &mhat, &gains.gamma, DirectVariant::InertiaWeighted)
            }
            ControlLaw::IdIndirect => adapt_indirect(&ctrl.w_star, &ctrl.theta_hat, &ctrl.tau_f, &gains.gamma),
        };

        let y = regressor(&robot.q, &robot.qdot, &zdot, &s, gains.lambda_c, cfg.law.regressor_variant());
        let th = &ctrl.theta_hat;
        let tau = match cfg.law {
            ControlLaw::DcVariableGain => {
                torque_variable_gain(robot, &zdot, &s, &ctrl.w, th, &theta_hat_dot, gains.lambda_c)
            }
            ControlLaw::DcConstantGain => {
                torque_constant_gain(robot, &zdot, &s, &ctrl.w, th, &theta_hat_dot, gains.lambda_c_star)
            }
            ControlLaw::DcConstantGainNoM => {
                torque_constant_gain_no_inertia(robot, &zdot, &s, &ctrl.w_star, th, &theta_hat_dot, gains.lambda_c_star)
            }
            ControlLaw::IdDirectA | ControlLaw::IdDirectB | ControlLaw::IdIndirect => {
                torque_inverse_dynamics(robot, &zdot, &s, &ctrl.w_star, th, &theta_hat_dot, gains.lambda_c)
            }
        };
        let tau_star = cfg.tau_star.eval(t);
        let qddot = forward_dynamics(robot, &tau, &tau_star, &self.theta)?;
        let y_star = regressor_accel(&robot.q, &robot.qdot, &qddot);
        Ok(ControlOutputs { desired, mhat, z, zdot, s, theta_hat_dot, y, y_star, tau, tau_star, qddot })
    }

    /// Time derivative of the loop state. With `held` the control quantities
    /// come from the last sampling instant; otherwise the law is evaluated at
    /// `(t, x)`.
    pub fn derivative(&self, t: f64, x: &LoopState, held: Option<&ControlOutputs>) -> Result<LoopState, SimError> {
        let lambda_c = self.cfg.gains.lambda_c;
        let fresh;
        let out = match held {
            Some(h) => h,
            None => {
                fresh = self.outputs(t, x)?;
                &fresh
            }
        };
        let (qddot, desired, mhat) = if held.is_some() {
            let desired = self.cfg.trajectory.sample(t);
            let qddot = forward_dynamics(&x.robot, &out.tau, &self.cfg.tau_star.eval(t), &self.theta)?;
            (qddot, desired, inertia(&x.robot.q, &x.ctrl.theta_hat))
        } else {
            (out.qddot, out.desired, out.mhat)
        };
        let reference = reference_rhs(&x.reference, &x.robot, &desired, &mhat, &self.cfg.reference)?;
        Ok(LoopState {
            robot: RobotState::new(x.robot.qdot, qddot),
            reference,
            ctrl: ControllerState {
                theta_hat: out.theta_hat_dot,
                w: filter_rhs(&x.ctrl.w, &out.y, lambda_c),
                w_star: filter_rhs(&x.ctrl.w_star, &out.y_star, lambda_c),
                tau_f: torque_filter_rhs(&x.ctrl.tau_f, &out.tau, lambda_c),
            },
        })
    }

    /// Advance one control period from `t`. `out` must be `outputs(t, x)`.
    pub fn step(&self, t: f64, x: &LoopState, out: &ControlOutputs) -> Result<LoopState, SimError> {
        let h = self.cfg.dt_plant;
        let held = match self.cfg.sampling {
            Sampling::ZeroOrderHold => Some(out),
            Sampling::Continuous => None,
        };
        let mut state = *x;
        for k in 0..self.cfg.substeps() {
            let ts = t + k as f64 * h;
            state = try_rk4_step(&state, ts, h, |tt, xx| self.derivative(tt, xx, held))?;
        }
        if let Some(b) = &self.cfg.projection {
            state.ctrl.theta_hat = b.project(&state.ctrl.theta_hat);
        }
        Ok(state)
    }

    /// Composite error driven by `τ*`: `M s − W Δϑ` for the laws on `W`,
    /// `M̂ s − W* Δϑ` for the laws on `W*`. Returns `(composite, filtered-regressor term)`.
    pub fn composite_error(&self, x: &LoopState, out: &ControlOutputs) -> (Vector2<f64>, Vector2<f64>) {
        let dtheta = x.ctrl.theta_hat - self.theta;
        if self.cfg.law.uses_accel_regressor() {
            let wd = x.ctrl.w_star * dtheta;
            (out.mhat * out.s - wd, wd)
        } else {
            diagnostics::psi_parts(&x.robot.q, &out.s, &x.ctrl.w, &x.ctrl.theta_hat, &self.theta)
        }
    }

    fn row(&self, t: f64, x: &LoopState, out: &ControlOutputs) -> LogRow {
        let (psi, w_dtheta) = self.composite_error(x, out);
        LogRow {
            t,
            q: x.robot.q,
            qdot: x.robot.qdot,
            qddot: out.qddot,
            qd: out.desired.pos,
            qd_vel: out.desired.vel,
            qd_acc: out.desired.acc,
            z: out.z,
            zdot: out.zdot,
            s: out.s,
            tau: out.tau,
            tau_star: out.tau_star,
            theta_hat: x.ctrl.theta_hat,
            theta_hat_dot: out.theta_hat_dot,
            psi,
            w_dtheta,
            v: f64::NAN,
            rem: None,
        }
    }
}

/// Run a configuration to completion (or abort) and return the log at the
/// control rate. The `V` column is filled with the law's Lyapunov candidate;
/// the remainder columns are left empty.
pub fn run(cfg: &SimConfig) -> Result<SimLog, SimError> {
    let engine = Engine::new(cfg)?;
    let mut state = engine.initial_state()?;
    let steps = cfg.control_steps();
    let mut log = SimLog::new(cfg.dt_control * cfg.log_every as f64);
    let mut inertia_was_pd = false;
    for k in 0..=steps {
        let t = k as f64 * cfg.dt_control;
        let out = match engine.outputs(t, &state) {
            Ok(o) if state.is_finite() && o.tau.iter().all(|v| v.is_finite()) => o,
            Ok(_) => {
                log.abort(t, "non-finite state");
                break;
            }
            Err(SimError::Dynamics(e)) => {
                log.abort(t, &e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        if cfg.law.is_inverse_dynamics() {
            let pd = is_positive_definite(&out.mhat);
            if inertia_was_pd && !pd {
                log.abort(t, "estimated inertia lost positive definiteness");
                break;
            }
            inertia_was_pd |= pd;
        }
        if k % cfg.log_every == 0 {
            log.rows.push(engine.row(t, &state, &out));
        }
        if k == steps {
            break;
        }
        state = match engine.step(t, &state, &out) {
            Ok(s) => s,
            Err(SimError::Dynamics(e)) => {
                log.abort(t + cfg.dt_control, &e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
    }
    let v = diagnostics::lyapunov(&log, &engine.true_theta(), cfg, diagnostics::LyapunovVariant::for_law(cfg.law));
    for (row, v) in log.rows.iter_mut().zip(v) {
        row.v = v;
    }
    Ok(log)
}

/// Gamma as the identity scaled by `g`.
pub fn scalar_gamma(g: f64) -> Matrix3<f64> {
    Matrix3::identity() * g
}
