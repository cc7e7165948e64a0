//! Reference dynamics of differential-cascaded degree ℓ ∈ {1, 2, 3}.
//!
//! The reference output `z` is generated by an ℓ-th order differential
//! equation driven by the tracking errors and an interconnection term built
//! from `M̂(q) s`. Written literally, the ℓ ≥ 2 equations contain joint
//! accelerations (and jerk for ℓ = 3) as well as `d/dt [M̂(q)(q̇ − z)]`. The
//! realizations here fold every such derivative into the state, so the
//! right-hand sides only consume `q`, `q̇`, `M̂(q)` and `q_d` up to its second
//! derivative:
//!
//! * ℓ = 1: `x = z`
//! * ℓ = 2: `x = [z, ż − q̈_d + a q̇ + Λ(z − q̇_d) + κ M̂ (z − q̇)]`
//! * ℓ = 3: `x = [z, ż − q̈_d + a q̇, z̈ − q⃛_d + a Δq̈ + Λ(ż − q̈_d) + A₂ q̇ + κ M̂ (z − q̇)]`
//!
//! where `a` is the coefficient of the highest error derivative, `Λ` is zero
//! for the original form and the symmetric gain for the modified form, and
//! `κ` weighs the differentiated interconnection.

mod hurwitz;
mod trajectory;

pub use hurwitz::{hurwitz_check, poly_mul, routh_hurwitz};
pub use trajectory::{DesiredState, Trajectory};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::dynamics::{sym_eigenvalues, RobotState};
use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceForm {
    Original,
    /// Error polynomial factored as `(D + Λ)(D + α)^ℓ`.
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interconnection {
    /// Only the low-frequency part `K s` enters.
    LowFreq,
    /// `λ_S* d/dt[M̂ s] + K s`.
    Full,
    /// `λ_S* d/dt[M̂ s + λc M̂ s] + K s`.
    FullPlusLc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// `K = λc λ_S* M̂(q)`.
    VariableGain,
    /// `K = λ_S* λc* I`.
    ConstantGain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceConfig {
    pub ell: usize,
    /// `α_0, …, α_ℓ` of the original form.
    pub alphas: Vec<f64>,
    /// Scalar `α` of the modified form.
    pub alpha: f64,
    /// Symmetric positive definite `Λ` of the modified form.
    pub lambda: Matrix2<f64>,
    pub lambda_s: f64,
    pub lambda_c: f64,
    pub lambda_c_star: f64,
    pub form: ReferenceForm,
    pub interconnection: Interconnection,
    pub feedback: Feedback,
}

/// Matrix coefficients of the error equation
/// `z^{(ℓ)} − q_d^{(ℓ+1)} + a Δq^{(ℓ)} + Λ (z^{(ℓ-1)} − q_d^{(ℓ)}) + Σ A_i Δq^{(i)} = interconnection`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCoefficients {
    pub top: f64,
    pub top_lambda: Matrix2<f64>,
    pub lower: [Matrix2<f64>; 3],
}

impl ErrorCoefficients {
    /// Certainty-equivalence coefficient matrices `P_0 … P_ℓ` of
    /// `Δq^{(ℓ+1)} + P_ℓ Δq^{(ℓ)} + … + P_0 Δq`.
    pub fn linear_model(&self, ell: usize) -> Vec<Matrix2<f64>> {
        let mut p: Vec<Matrix2<f64>> = self.lower[..ell].to_vec();
        p.push(Matrix2::identity() * self.top + self.top_lambda);
        p
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ReferenceConfig {
    pub fn coefficients(&self) -> ErrorCoefficients {
        let ell = self.ell;
        match self.form {
            ReferenceForm::Original => {
                let mut lower = [Matrix2::zeros(); 3];
                for (i, slot) in lower.iter_mut().enumerate().take(ell) {
                    *slot = Matrix2::identity() * self.alphas[i];
                }
                ErrorCoefficients { top: self.alphas[ell], top_lambda: Matrix2::zeros(), lower }
            }
            ReferenceForm::Modified => {
                // c_i: coefficients of (θ + α)^ℓ, ascending.
                let c: Vec<f64> =
                    (0..=ell).map(|i| binomial(ell, i) * self.alpha.powi((ell - i) as i32)).collect();
                let mut lower = [Matrix2::zeros(); 3];
                for (i, slot) in lower.iter_mut().enumerate().take(ell) {
                    let below = if i == 0 { 0.0 } else { c[i - 1] };
                    *slot = Matrix2::identity() * below + self.lambda * c[i];
                }
                ErrorCoefficients { top: c[ell - 1], top_lambda: self.lambda, lower }
            }
        }
    }

    /// Weight `κ` of `d/dt [M̂(q) s]` in the interconnection.
    pub fn derivative_weight(&self) -> f64 {
        match self.interconnection {
            Interconnection::LowFreq => 0.0,
            Interconnection::Full => self.lambda_s,
            Interconnection::FullPlusLc => self.lambda_s * (1.0 + self.lambda_c),
        }
    }

    /// Low-frequency interconnection gain `K` multiplying `s`.
    pub fn low_freq_gain(&self, mhat: &Matrix2<f64>) -> Matrix2<f64> {
        match self.feedback {
            Feedback::VariableGain => mhat * (self.lambda_c * self.lambda_s),
            Feedback::ConstantGain => Matrix2::identity() * (self.lambda_s * self.lambda_c_star),
        }
    }

    /// `α` used by the initial-value conventions: `α_0^{1/(ℓ+1)}` for the
    /// original form, the configured scalar for the modified form.
    pub fn init_alpha(&self) -> f64 {
        match self.form {
            ReferenceForm::Original => self.alphas[0].powf(1.0 / (self.ell as f64 + 1.0)),
            ReferenceForm::Modified => self.alpha,
        }
    }

    /// Descending coefficients of each scalar characteristic polynomial of
    /// the error dynamics (one per eigenvalue of `Λ` for the modified form).
    pub fn characteristic_polynomials(&self) -> Vec<Vec<f64>> {
        match self.form {
            ReferenceForm::Original => {
                let mut d = vec![1.0];
                d.extend(self.alphas.iter().rev());
                vec![d]
            }
            ReferenceForm::Modified => {
                let (lo, hi) = sym_eigenvalues(&self.lambda);
                let mut inner = vec![1.0];
                for _ in 0..self.ell {
                    inner = poly_mul(&inner, &[1.0, self.alpha]);
                }
                [lo, hi].iter().map(|mu| poly_mul(&[1.0, *mu], &inner)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=3).contains(&self.ell) {
            return Err(ConfigError::invalid("reference.ell", format!("must be 1, 2 or 3, got {}", self.ell)));
        }
        if self.alphas.len() != self.ell + 1 {
            return Err(ConfigError::invalid(
                "reference.alphas",
                format!("expected {} coefficients for ell = {}, got {}", self.ell + 1, self.ell, self.alphas.len()),
            ));
        }
        if !(self.lambda_c.is_finite() && self.lambda_c > 0.0) {
            return Err(ConfigError::invalid("controller.lambda_c", "must be positive"));
        }
        if !self.lambda_s.is_finite() {
            return Err(ConfigError::invalid("reference.lambda_s", "must be finite"));
        }
        if self.feedback == Feedback::ConstantGain && !(self.lambda_c_star.is_finite() && self.lambda_c_star > 0.0) {
            return Err(ConfigError::invalid("controller.lambda_c_star", "must be positive"));
        }
        if self.ell == 1 && self.interconnection != Interconnection::LowFreq {
            return Err(ConfigError::invalid(
                "reference.interconnection",
                "degree one admits only the low_freq interconnection",
            ));
        }
        match self.form {
            ReferenceForm::Original => {
                if !hurwitz_check(&self.alphas) {
                    return Err(ConfigError::Hurwitz(format!(
                        "theta^{} + alphas {:?} fails the Routh test",
                        self.ell + 1,
                        self.alphas
                    )));
                }
            }
            ReferenceForm::Modified => {
                if !(self.alpha.is_finite() && self.alpha > 0.0) {
                    return Err(ConfigError::invalid("reference.alpha", "must be positive"));
                }
                let asym = (self.lambda[(0, 1)] - self.lambda[(1, 0)]).abs();
                if asym > 1e-12 * self.lambda.norm() {
                    return Err(ConfigError::invalid("reference.lambda", "must be symmetric"));
                }
                if !self.characteristic_polynomials().iter().all(|p| routh_hurwitz(p)) {
                    return Err(ConfigError::Hurwitz(
                        "modified form needs alpha > 0 and a positive definite Lambda".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn expect_degree(&self, ell: usize) -> Result<(), ConfigError> {
        if self.ell == ell {
            Ok(())
        } else {
            Err(ConfigError::DegreeMismatch { expected: ell, found: self.ell })
        }
    }
}

/// Degree-reduced state `x*`, stored as up to three stacked 2-vectors; blocks
/// beyond `ell` stay zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub ell: usize,
    pub blocks: [Vector2<f64>; 3],
}

impl ReferenceState {
    pub fn zeros(ell: usize) -> Self {
        Self { ell, blocks: [Vector2::zeros(); 3] }
    }

    pub fn z(&self) -> Vector2<f64> {
        self.blocks[0]
    }

    pub fn add_scaled(&self, other: &Self, h: f64) -> Self {
        let mut out = *self;
        for (b, o) in out.blocks.iter_mut().zip(other.blocks.iter()) {
            *b += o * h;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flat_map(|b| b.iter()).all(|v| v.is_finite())
    }
}

struct Errors {
    e: Vector2<f64>,
    edot: Vector2<f64>,
}

fn errors(robot: &RobotState, desired: &DesiredState) -> Errors {
    Errors { e: robot.q - desired.pos, edot: robot.qdot - desired.vel }
}

/// Degree one: `ż = q̈_d − a Δq̇ − Λ(z − q̇_d) − A₀ Δq + K (q̇ − z)`.
pub fn reference_rhs_l1(
    state: &ReferenceState,
    robot: &RobotState,
    desired: &DesiredState,
    mhat: &Matrix2<f64>,
    cfg: &ReferenceConfig,
) -> Result<ReferenceState, ConfigError> {
    cfg.expect_degree(1)?;
    let k = cfg.coefficients();
    let z = state.blocks[0];
    let Errors { e, edot } = errors(robot, desired);
    let zdot = desired.acc - edot * k.top - k.top_lambda * (z - desired.vel) - k.lower[0] * e
        + cfg.low_freq_gain(mhat) * (robot.qdot - z);
    let mut d = ReferenceState::zeros(1);
    d.blocks[0] = zdot;
    Ok(d)
}

pub fn reference_rhs_l2(
    state: &ReferenceState,
    robot: &RobotState,
    desired: &DesiredState,
    mhat: &Matrix2<f64>,
    cfg: &ReferenceConfig,
) -> Result<ReferenceState, ConfigError> {
    cfg.expect_degree(2)?;
    let k = cfg.coefficients();
    let kappa = cfg.derivative_weight();
    let [z, x2, _] = state.blocks;
    let Errors { e, edot } = errors(robot, desired);
    let mut d = ReferenceState::zeros(2);
    d.blocks[0] = x2 + desired.acc - robot.qdot * k.top - k.top_lambda * (z - desired.vel)
        - mhat * (z - robot.qdot) * kappa;
    d.blocks[1] = desired.acc * k.top - k.lower[1] * edot - k.lower[0] * e
        + cfg.low_freq_gain(mhat) * (robot.qdot - z);
    Ok(d)
}

pub fn reference_rhs_l3(
    state: &ReferenceState,
    robot: &RobotState,
    desired: &DesiredState,
    mhat: &Matrix2<f64>,
    cfg: &ReferenceConfig,
) -> Result<ReferenceState, ConfigError> {
    cfg.expect_degree(3)?;
    let k = cfg.coefficients();
    let kappa = cfg.derivative_weight();
    let [z, x2, x3] = state.blocks;
    let Errors { e, edot } = errors(robot, desired);
    // ż − q̈_d, read off the second block.
    let zdot_err = x2 - robot.qdot * k.top;
    let mut d = ReferenceState::zeros(3);
    d.blocks[0] = zdot_err + desired.acc;
    d.blocks[1] = x3 + desired.acc * k.top - k.top_lambda * zdot_err - k.lower[2] * robot.qdot
        - mhat * (z - robot.qdot) * kappa;
    d.blocks[2] = k.lower[2] * desired.acc - k.lower[1] * edot - k.lower[0] * e
        + cfg.low_freq_gain(mhat) * (robot.qdot - z);
    Ok(d)
}

pub fn reference_rhs(
    state: &ReferenceState,
    robot: &RobotState,
    desired: &DesiredState,
    mhat: &Matrix2<f64>,
    cfg: &ReferenceConfig,
) -> Result<ReferenceState, ConfigError> {
    match cfg.ell {
        1 => reference_rhs_l1(state, robot, desired, mhat, cfg),
        2 => reference_rhs_l2(state, robot, desired, mhat, cfg),
        3 => reference_rhs_l3(state, robot, desired, mhat, cfg),
        found => Err(ConfigError::DegreeMismatch { expected: 3, found }),
    }
}

/// `(z, ż)` from the degree-reduced state.
pub fn recover_z(
    state: &ReferenceState,
    robot: &RobotState,
    desired: &DesiredState,
    mhat: &Matrix2<f64>,
    cfg: &ReferenceConfig,
) -> Result<(Vector2<f64>, Vector2<f64>), ConfigError> {
    let z = state.blocks[0];
    let zdot = match cfg.ell {
        1 => reference_rhs_l1(state, robot, desired, mhat, cfg)?.blocks[0],
        2 => {
            let k = cfg.coefficients();
            state.blocks[1] + desired.acc - robot.qdot * k.top - k.top_lambda * (z - desired.vel)
                - mhat * (z - robot.qdot) * cfg.derivative_weight()
        }
        3 => state.blocks[1] + desired.acc - robot.qdot * cfg.coefficients().top,
        found => return Err(ConfigError::DegreeMismatch { expected: 3, found }),
    };
    Ok((z, zdot))
}

/// Initial reference state: `z(0) = q̇_d(0)` and, for ℓ ≥ 2, the binomial
/// choices of `ż(0)` (and `z̈(0)` for ℓ = 3) that keep `q⃛_d` out of `x*(0)`.
pub fn init_reference(
    robot: &RobotState,
    desired: &DesiredState,
    mhat: &Matrix2<f64>,
    cfg: &ReferenceConfig,
) -> Result<ReferenceState, ConfigError> {
    cfg.validate()?;
    let Errors { e, edot } = errors(robot, desired);
    let k = cfg.coefficients();
    let kappa = cfg.derivative_weight();
    let a = cfg.init_alpha();
    let z0 = desired.vel;
    let mut x = ReferenceState::zeros(cfg.ell);
    x.blocks[0] = z0;
    match cfg.ell {
        1 => {}
        2 => {
            let zdot0 = desired.acc - edot * (2.0 * a) - e * (a * a);
            x.blocks[1] = zdot0 - desired.acc + robot.qdot * k.top + k.top_lambda * (z0 - desired.vel)
                + mhat * (z0 - robot.qdot) * kappa;
        }
        3 => {
            let zdot0 = desired.acc - edot * (3.0 * a) - e * (3.0 * a * a);
            // Δq̈(0) is not measured; ż(0) − q̈_d(0) stands in for it.
            let accel_err = zdot0 - desired.acc;
            let zddot_err = -accel_err * (3.0 * a) - edot * (3.0 * a * a) - e * a.powi(3);
            x.blocks[1] = zdot0 - desired.acc + robot.qdot * k.top;
            x.blocks[2] = zddot_err + accel_err * k.top + k.top_lambda * accel_err + k.lower[2] * robot.qdot
                + mhat * (z0 - robot.qdot) * kappa;
        }
        _ => unreachable!("validated"),
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn preset(ell: usize, form: ReferenceForm) -> ReferenceConfig {
        let a0: f64 = 100.0;
        let alphas = match ell {
            1 => vec![a0, 2.0 * a0.sqrt()],
            2 => vec![a0, 3.0 * a0.powf(2.0 / 3.0), 3.0 * a0.powf(1.0 / 3.0)],
            _ => vec![a0, 4.0 * a0.powf(0.75), 6.0 * a0.sqrt(), 4.0 * a0.powf(0.25)],
        };
        let alpha = a0.powf(1.0 / (ell as f64 + 1.0));
        ReferenceConfig {
            ell,
            alphas,
            alpha,
            lambda: Matrix2::identity() * alpha,
            lambda_s: 0.5,
            lambda_c: 10.0,
            lambda_c_star: 100.0,
            form,
            interconnection: if ell == 1 { Interconnection::LowFreq } else { Interconnection::Full },
            feedback: Feedback::VariableGain,
        }
    }

    fn random_inputs() -> (RobotState, DesiredState, Matrix2<f64>) {
        let robot = RobotState::new(Vector2::new(0.3, -0.8), Vector2::new(1.1, -0.4));
        let desired =
            DesiredState { pos: Vector2::new(0.1, 0.2), vel: Vector2::new(0.9, 0.5), acc: Vector2::new(-2.0, 1.3) };
        let mhat = Matrix2::new(5.0, 1.5, 1.5, 2.0);
        (robot, desired, mhat)
    }

    #[test]
    fn exact_tracking_fixed_point_degree_one() {
        let cfg = preset(1, ReferenceForm::Original);
        let (_, desired, mhat) = random_inputs();
        let robot = RobotState::new(desired.pos, desired.vel);
        let mut x = ReferenceState::zeros(1);
        x.blocks[0] = robot.qdot;
        let d = reference_rhs_l1(&x, &robot, &desired, &mhat, &cfg).unwrap();
        assert_relative_eq!(d.blocks[0], desired.acc, epsilon = 1e-12);
    }

    #[test]
    fn degree_one_term_by_term() {
        let cfg = preset(1, ReferenceForm::Original);
        let (robot, desired, mhat) = random_inputs();
        let mut x = ReferenceState::zeros(1);
        x.blocks[0] = Vector2::new(0.7, -0.1);
        let z = x.blocks[0];
        let expected = desired.acc - 20.0 * (robot.qdot - desired.vel) - 100.0 * (robot.q - desired.pos)
            + 0.5 * 10.0 * mhat * (robot.qdot - z);
        let d = reference_rhs_l1(&x, &robot, &desired, &mhat, &cfg).unwrap();
        assert_relative_eq!(d.blocks[0], expected, epsilon = 1e-12);

        let off = ReferenceConfig { lambda_s: 0.0, ..cfg.clone() };
        let d = reference_rhs_l1(&x, &robot, &desired, &mhat, &off).unwrap();
        let linear = desired.acc - 20.0 * (robot.qdot - desired.vel) - 100.0 * (robot.q - desired.pos);
        assert_relative_eq!(d.blocks[0], linear, epsilon = 1e-12);
    }

    #[test]
    fn modified_degree_one_term_by_term() {
        let cfg = preset(1, ReferenceForm::Modified);
        let (robot, desired, mhat) = random_inputs();
        let mut x = ReferenceState::zeros(1);
        x.blocks[0] = Vector2::new(0.7, -0.1);
        let z = x.blocks[0];
        let (a, lam) = (cfg.alpha, cfg.lambda);
        let expected = desired.acc - a * (robot.qdot - desired.vel) - lam * (z - desired.vel)
            - a * lam * (robot.q - desired.pos)
            + 5.0 * mhat * (robot.qdot - z);
        let d = reference_rhs_l1(&x, &robot, &desired, &mhat, &cfg).unwrap();
        assert_relative_eq!(d.blocks[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let cfg = preset(2, ReferenceForm::Original);
        let (robot, desired, mhat) = random_inputs();
        let x = ReferenceState::zeros(2);
        assert_eq!(
            reference_rhs_l1(&x, &robot, &desired, &mhat, &cfg),
            Err(ConfigError::DegreeMismatch { expected: 1, found: 2 })
        );
        assert!(reference_rhs_l3(&x, &robot, &desired, &mhat, &cfg).is_err());
    }

    #[test]
    fn fixed_point_on_exact_tracking_all_degrees() {
        let (_, desired, mhat) = random_inputs();
        let robot = RobotState::new(desired.pos, desired.vel);
        for ell in 1..=3 {
            for form in [ReferenceForm::Original, ReferenceForm::Modified] {
                let cfg = preset(ell, form);
                let x = init_reference(&robot, &desired, &mhat, &cfg).unwrap();
                let (z, zdot) = recover_z(&x, &robot, &desired, &mhat, &cfg).unwrap();
                assert_relative_eq!(z, desired.vel, epsilon = 1e-12);
                assert_relative_eq!(zdot, desired.acc, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn degree_two_zero_estimate_drops_interconnection() {
        let cfg = preset(2, ReferenceForm::Original);
        let (robot, desired, _) = random_inputs();
        let mut x = ReferenceState::zeros(2);
        x.blocks = [Vector2::new(0.2, 0.4), Vector2::new(-1.0, 3.0), Vector2::zeros()];
        let d = reference_rhs_l2(&x, &robot, &desired, &Matrix2::zeros(), &cfg).unwrap();
        let a = &cfg.alphas;
        assert_relative_eq!(d.blocks[0], x.blocks[1] + desired.acc - a[2] * robot.qdot, epsilon = 1e-12);
        assert_relative_eq!(
            d.blocks[1],
            a[2] * desired.acc - a[1] * (robot.qdot - desired.vel) - a[0] * (robot.q - desired.pos),
            epsilon = 1e-12
        );
    }

    #[test]
    fn degree_three_zero_estimate_last_block() {
        let cfg = preset(3, ReferenceForm::Original);
        let (robot, desired, _) = random_inputs();
        let mut x = ReferenceState::zeros(3);
        x.blocks = [Vector2::new(0.2, 0.4), Vector2::new(-1.0, 3.0), Vector2::new(0.5, 0.5)];
        let d = reference_rhs_l3(&x, &robot, &desired, &Matrix2::zeros(), &cfg).unwrap();
        let a = &cfg.alphas;
        assert_relative_eq!(
            d.blocks[2],
            -a[0] * (robot.q - desired.pos) - a[1] * (robot.qdot - desired.vel) + a[2] * desired.acc,
            epsilon = 1e-12
        );
    }

    #[test]
    fn degree_three_preset_is_binomial() {
        let cfg = preset(3, ReferenceForm::Original);
        let a = cfg.init_alpha();
        assert_relative_eq!(a, 100f64.powf(0.25), epsilon = 1e-15);
        let expect = [a.powi(4), 4.0 * a.powi(3), 6.0 * a * a, 4.0 * a];
        for (x, y) in cfg.alphas.iter().zip(expect) {
            assert_relative_eq!(*x, y, max_relative = 1e-14);
        }
        assert!(hurwitz_check(&expect));
    }

    #[test]
    fn modified_coefficients_expand_to_shifted_binomial() {
        // (θ + λ)(θ + α)^2 with Λ = λ I must equal θ^3 + P_2 θ^2 + P_1 θ + P_0.
        let cfg = preset(2, ReferenceForm::Modified);
        let p = cfg.coefficients().linear_model(2);
        let poly = &cfg.characteristic_polynomials()[0];
        for i in 0..3 {
            assert_relative_eq!(p[i][(0, 0)], poly[3 - i], max_relative = 1e-14);
            assert_eq!(p[i][(0, 1)], 0.0);
        }
        // Matched low-frequency gain: P_0 = α_0.
        assert_relative_eq!(p[0][(0, 0)], 100.0, max_relative = 1e-12);
    }

    #[test]
    fn preset_initialization_degree_three() {
        let cfg = preset(3, ReferenceForm::Original);
        let (robot, desired, mhat) = random_inputs();
        let x = init_reference(&robot, &desired, &mhat, &cfg).unwrap();
        let a = cfg.init_alpha();
        let (e, edot) = (robot.q - desired.pos, robot.qdot - desired.vel);
        let zdot0 = desired.acc - 3.0 * a * edot - 3.0 * a * a * e;
        let z0 = desired.vel;
        let x3 = a * (zdot0 - desired.acc) + 6.0 * a * a * robot.qdot - 3.0 * a * a * edot - a.powi(3) * e
            + 0.5 * mhat * (z0 - robot.qdot);
        assert_relative_eq!(x.blocks[2], x3, epsilon = 1e-10);
        let (z, zdot) = recover_z(&x, &robot, &desired, &mhat, &cfg).unwrap();
        assert_relative_eq!(z, z0, epsilon = 1e-12);
        assert_relative_eq!(zdot, zdot0, epsilon = 1e-10);
    }

    #[test]
    fn preset_initialization_degree_two() {
        let cfg = preset(2, ReferenceForm::Original);
        let (robot, desired, mhat) = random_inputs();
        let x = init_reference(&robot, &desired, &mhat, &cfg).unwrap();
        let a = 100f64.powf(1.0 / 3.0);
        let zdot0 = desired.acc - 2.0 * a * (robot.qdot - desired.vel) - a * a * (robot.q - desired.pos);
        let (_, zdot) = recover_z(&x, &robot, &desired, &mhat, &cfg).unwrap();
        assert_relative_eq!(zdot, zdot0, epsilon = 1e-10);
    }

    #[test]
    fn on_trajectory_start_degree_three() {
        let cfg = preset(3, ReferenceForm::Original);
        let (_, desired, _) = random_inputs();
        let robot = RobotState::new(desired.pos, desired.vel);
        let x = init_reference(&robot, &desired, &Matrix2::zeros(), &cfg).unwrap();
        let a = cfg.init_alpha();
        assert_relative_eq!(x.blocks[2], 6.0 * a * a * robot.qdot, epsilon = 1e-10);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut cfg = preset(2, ReferenceForm::Original);
        cfg.alphas[1] = -1.0;
        assert!(matches!(cfg.validate(), Err(ConfigError::Hurwitz(_))));
        let mut cfg = preset(1, ReferenceForm::Original);
        cfg.interconnection = Interconnection::Full;
        assert!(cfg.validate().is_err());
        let mut cfg = preset(2, ReferenceForm::Modified);
        cfg.lambda = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        assert!(matches!(cfg.validate(), Err(ConfigError::Hurwitz(_))));
        let mut cfg = preset(3, ReferenceForm::Original);
        cfg.alphas.pop();
        assert!(cfg.validate().is_err());
    }
}
