//! Ground-truth diagnostics computed alongside or after a run. None of these
//! quantities is fed back to the controller.

use nalgebra::{Matrix2, Vector2, Vector3};

use super::{SimConfig, SimLog};
use crate::control::ControlLaw;
use crate::dynamics::{inertia, sym_eigenvalues, Regressor};
use crate::error::{ConfigError, DiagnosticError};
use crate::integrate::{rk4_step, OdeState};
use crate::reference::Feedback;

/// `(M(q) s − W Δϑ, W Δϑ)` with `Δϑ = ϑ̂ − ϑ`.
pub fn psi_parts(
    q: &Vector2<f64>,
    s: &Vector2<f64>,
    w: &Regressor,
    theta_hat: &Vector3<f64>,
    theta: &Vector3<f64>,
) -> (Vector2<f64>, Vector2<f64>) {
    let wd = w * (theta_hat - theta);
    (inertia(q, theta) * s - wd, wd)
}

pub fn diag_psi(
    q: &Vector2<f64>,
    s: &Vector2<f64>,
    w: &Regressor,
    theta_hat: &Vector3<f64>,
    theta: &Vector3<f64>,
) -> Vector2<f64> {
    psi_parts(q, s, w, theta_hat, theta).0
}

/// `ℓ`-th derivative of a uniformly sampled series by finite differences:
/// second-order central stencils inside, one-sided stencils of the same
/// order at the ends.
pub fn diag_remainder(s: &[Vector2<f64>], dt: f64, ell: usize) -> Result<Vec<Vector2<f64>>, DiagnosticError> {
    let (needed, central): (usize, &[(isize, f64)]) = match ell {
        1 => (3, &[(-1, -0.5), (1, 0.5)]),
        2 => (4, &[(-1, 1.0), (0, -2.0), (1, 1.0)]),
        3 => (5, &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)]),
        other => return Err(DiagnosticError::UnsupportedOrder(other)),
    };
    let forward: &[f64] = match ell {
        1 => &[-1.5, 2.0, -0.5],
        2 => &[2.0, -5.0, 4.0, -1.0],
        _ => &[-2.5, 9.0, -12.0, 7.0, -1.5],
    };
    let n = s.len();
    if n < needed {
        return Err(DiagnosticError::TooShort { len: n, needed });
    }
    let scale = dt.powi(ell as i32).recip();
    let reach = central.iter().map(|(o, _)| o.unsigned_abs()).max().unwrap_or(0);
    // Odd derivatives flip sign under time reversal.
    let backward_sign = if ell % 2 == 1 { -1.0 } else { 1.0 };
    let out = (0..n)
        .map(|i| {
            let d = if i < reach {
                forward.iter().enumerate().map(|(k, c)| s[i + k] * *c).sum::<Vector2<f64>>()
            } else if i + reach >= n {
                forward.iter().enumerate().map(|(k, c)| s[i - k] * (*c * backward_sign)).sum::<Vector2<f64>>()
            } else {
                central.iter().map(|(o, c)| s[(i as isize + o) as usize] * *c).sum::<Vector2<f64>>()
            };
            d * scale
        })
        .collect();
    Ok(out)
}

/// Fill the remainder columns of a log with `d^ℓ s / dt^ℓ`.
pub fn fill_remainder(log: &mut SimLog, ell: usize) -> Result<(), DiagnosticError> {
    let s: Vec<Vector2<f64>> = log.rows.iter().map(|r| r.s).collect();
    let rem = diag_remainder(&s, log.dt, ell)?;
    for (row, r) in log.rows.iter_mut().zip(rem) {
        row.rem = Some(r);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LyapunovVariant {
    /// `½∫sᵀMs + ½ΔϑᵀΓ⁻¹Δϑ − ∫ψᵀM⁻¹ψ`, integrals by the trapezoidal rule on the log grid.
    Quasi,
    /// `½ψᵀψ + (λc*/2) ΔϑᵀΓ⁻¹Δϑ`.
    ConstantGain,
    /// `½φᵀφ + ½ΔϑᵀΓ⁻¹Δϑ` with `φ = M̂ s − W* Δϑ`.
    NoInertia,
}

impl LyapunovVariant {
    pub fn for_law(law: ControlLaw) -> Self {
        match law {
            ControlLaw::DcConstantGain => LyapunovVariant::ConstantGain,
            ControlLaw::DcConstantGainNoM => LyapunovVariant::NoInertia,
            _ => LyapunovVariant::Quasi,
        }
    }
}

/// Lyapunov candidate evaluated along a log, one value per row.
pub fn lyapunov(log: &SimLog, theta: &Vector3<f64>, cfg: &SimConfig, variant: LyapunovVariant) -> Vec<f64> {
    let gamma_inv = cfg.gains.gamma_inverse();
    let param = |r: &super::LogRow| {
        let d = r.theta_hat - theta;
        0.5 * (d.transpose() * gamma_inv * d)[0]
    };
    match variant {
        LyapunovVariant::ConstantGain => log
            .rows
            .iter()
            .map(|r| 0.5 * r.psi.norm_squared() + cfg.gains.lambda_c_star * param(r))
            .collect(),
        LyapunovVariant::NoInertia => log.rows.iter().map(|r| 0.5 * r.psi.norm_squared() + param(r)).collect(),
        LyapunovVariant::Quasi => {
            let integrand = |r: &super::LogRow| {
                let m = inertia(&r.q, theta);
                let psi_weighted = m.cholesky().map(|c| c.solve(&r.psi)).unwrap_or(r.psi);
                0.5 * (r.s.transpose() * m * r.s)[0] - r.psi.dot(&psi_weighted)
            };
            let mut acc = 0.0;
            let mut prev: Option<f64> = None;
            log.rows
                .iter()
                .map(|r| {
                    let f = integrand(r);
                    if let Some(p) = prev {
                        acc += 0.5 * log.dt * (p + f);
                    }
                    prev = Some(f);
                    acc + param(r)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCheck {
    pub satisfied: bool,
    /// Largest eigenvalue of `M(q)` over the sampled `q₂`.
    pub lambda_max: f64,
    pub q2_at_max: f64,
    /// `λc λmax / 4`.
    pub threshold: f64,
    /// `λc* − threshold`.
    pub margin: f64,
}

/// Sample `q₂ ∈ [0, 2π)` at spacing at most `step` and compare `λc*` with
/// `λc · max λmax{M} / 4`.
pub fn gain_condition_check(lambda_c_star: f64, lambda_c: f64, theta: &Vector3<f64>, step: f64) -> GainCheck {
    let n = (std::f64::consts::TAU / step.min(0.01)).ceil() as usize;
    let (lambda_max, q2_at_max) = (0..n)
        .map(|k| {
            let q2 = std::f64::consts::TAU * k as f64 / n as f64;
            (sym_eigenvalues(&inertia(&Vector2::new(0.0, q2), theta)).1, q2)
        })
        .fold((f64::NEG_INFINITY, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best });
    let threshold = 0.25 * lambda_c * lambda_max;
    GainCheck { satisfied: lambda_c_star > threshold, lambda_max, q2_at_max, threshold, margin: lambda_c_star - threshold }
}

/// State of the certainty-equivalence linear model: the composite channel
/// `p` and `Δq` with its first `ℓ` derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LinearState {
    p: Vector2<f64>,
    d: [Vector2<f64>; 4],
}

impl OdeState for LinearState {
    fn add_scaled(&self, rate: &Self, h: f64) -> Self {
        let mut out = *self;
        out.p += rate.p * h;
        for (a, b) in out.d.iter_mut().zip(rate.d.iter()) {
            *a += b * h;
        }
        out
    }
}

/// `Δq` of the certainty-equivalence linear model
/// `ṗ = −λc p + τ*`,
/// `Δq^{(ℓ+1)} + P_ℓ Δq^{(ℓ)} + … + P_0 Δq = κ ṗ + λc λ_S p`,
/// on the run's control grid, started from the same initial errors as the
/// nonlinear run. Only the variable-gain feedback is linear in `p`.
pub fn linear_ce_response(cfg: &SimConfig) -> Result<Vec<(f64, Vector2<f64>)>, ConfigError> {
    let rc = &cfg.reference;
    if rc.feedback != Feedback::VariableGain {
        return Err(ConfigError::invalid(
            "reference.feedback",
            "the linear comparison model needs the variable-gain feedback",
        ));
    }
    rc.validate()?;
    let theta = cfg.plant.theta().map_err(|e| ConfigError::invalid("plant", e.to_string()))?;
    let ell = rc.ell;
    let p_coef: Vec<Matrix2<f64>> = rc.coefficients().linear_model(ell);
    let kappa = rc.derivative_weight();
    let lam_c = rc.lambda_c;
    let lam_s = rc.lambda_s;

    let des = cfg.trajectory.sample(0.0);
    let q0 = cfg.q0.unwrap_or(des.pos);
    let qdot0 = cfg.qdot0.unwrap_or(des.vel);
    let e = q0 - des.pos;
    let edot = qdot0 - des.vel;
    let a = rc.init_alpha();
    let mut x = LinearState { p: inertia(&q0, &theta) * (qdot0 - des.vel), d: [Vector2::zeros(); 4] };
    x.d[0] = e;
    if ell >= 1 {
        x.d[1] = edot;
    }
    match ell {
        2 => x.d[2] = -edot * (2.0 * a) - e * (a * a),
        3 => {
            let acc = -edot * (3.0 * a) - e * (3.0 * a * a);
            x.d[2] = acc;
            x.d[3] = -acc * (3.0 * a) - edot * (3.0 * a * a) - e * a.powi(3);
        }
        _ => {}
    }

    let rhs = |t: f64, x: &LinearState| {
        let pdot = -x.p * lam_c + cfg.tau_star.eval(t);
        let input = pdot * kappa + x.p * (lam_c * lam_s);
        let mut r = LinearState { p: pdot, d: [Vector2::zeros(); 4] };
        for i in 0..ell {
            r.d[i] = x.d[i + 1];
        }
        r.d[ell] = input - (0..=ell).map(|i| p_coef[i] * x.d[i]).sum::<Vector2<f64>>();
        r
    };

    let h = cfg.dt_plant;
    let sub = cfg.substeps();
    let steps = cfg.control_steps();
    let mut out = Vec::with_capacity(steps / cfg.log_every + 1);
    for k in 0..=steps {
        let t = k as f64 * cfg.dt_control;
        if k % cfg.log_every == 0 {
            out.push((t, x.d[0]));
        }
        for j in 0..sub {
            x = rk4_step(&x, t + j as f64 * h, h, rhs);
        }
    }
    Ok(out)
}
