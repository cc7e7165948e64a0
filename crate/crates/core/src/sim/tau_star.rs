use std::cmp::Ordering;
use std::f64::consts::TAU;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// Reference-torque input `τ*(t)` acting on the plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauStar {
    #[default]
    Zero,
    /// `value` for `t ≥ t_on`, zero before.
    Step { value: [f64; 2], t_on: f64 },
    /// `amplitude · sin(2π frequency (t − t_on))` for `t ≥ t_on`.
    Sinusoid { amplitude: [f64; 2], frequency: f64, t_on: f64 },
    /// Piecewise-linear interpolation of samples; held constant outside the range.
    Samples { times: Vec<f64>, values: Vec<[f64; 2]> },
}

impl TauStar {
    pub fn eval(&self, t: f64) -> Vector2<f64> {
        match self {
            TauStar::Zero => Vector2::zeros(),
            TauStar::Step { value, t_on } => {
                if t >= *t_on {
                    Vector2::new(value[0], value[1])
                } else {
                    Vector2::zeros()
                }
            }
            TauStar::Sinusoid { amplitude, frequency, t_on } => {
                if t >= *t_on {
                    let s = (TAU * frequency * (t - t_on)).sin();
                    Vector2::new(amplitude[0] * s, amplitude[1] * s)
                } else {
                    Vector2::zeros()
                }
            }
            TauStar::Samples { times, values } => interpolate(times, values, t),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let TauStar::Samples { times, values } = self {
            if times.is_empty() || times.len() != values.len() {
                return Err("tau_star samples need matching, non-empty time and value columns".into());
            }
            if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater)) {
                return Err("tau_star sample times must be strictly increasing".into());
            }
        }
        Ok(())
    }

    /// Parse `t,tau1,tau2` rows (header optional).
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => {
                    times.push(v[0]);
                    values.push([v[1], v[2]]);
                }
                Err(_) if lineno == 0 => continue,
                _ => return Err(format!("line {}: expected `t,tau1,tau2`", lineno + 1)),
            }
        }
        let out = TauStar::Samples { times, values };
        out.validate()?;
        Ok(out)
    }
}

fn interpolate(times: &[f64], values: &[[f64; 2]], t: f64) -> Vector2<f64> {
    let v = |i: usize| Vector2::new(values[i][0], values[i][1]);
    if times.is_empty() {
        return Vector2::zeros();
    }
    if t <= times[0] {
        return v(0);
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return v(last);
    }
    let hi = times.partition_point(|&x| x <= t);
    let lo = hi - 1;
    let w = (t - times[lo]) / (times[hi] - times[lo]);
    v(lo) * (1.0 - w) + v(hi) * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_switches_on() {
        let s = TauStar::Step { value: [1.0, -2.0], t_on: 1.0 };
        assert_eq!(s.eval(0.999), Vector2::zeros());
        assert_eq!(s.eval(1.0), Vector2::new(1.0, -2.0));
    }

    #[test]
    fn samples_interpolate_linearly() {
        let s = TauStar::from_csv("t,tau1,tau2\n0,0,0\n1,2,4\n3,2,0\n").unwrap();
        assert_eq!(s.eval(0.5), Vector2::new(1.0, 2.0));
        assert_eq!(s.eval(2.0), Vector2::new(2.0, 2.0));
        assert_eq!(s.eval(-1.0), Vector2::zeros());
        assert_eq!(s.eval(10.0), Vector2::new(2.0, 0.0));
    }

    #[test]
    fn bad_samples_rejected() {
        assert!(TauStar::from_csv("0,1,1\n0,2,2\n").is_err());
        assert!(TauStar::from_csv("0,1\n").is_err());
        assert!(TauStar::from_csv("").is_err());
    }
}
