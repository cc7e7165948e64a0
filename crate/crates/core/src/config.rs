//! TOML configuration and the five experiment presets.
//!
//! A document is applied on top of a preset (`preset = "figN"`, default
//! `fig1`); every key is optional and overrides the preset value.
//!
//! ```toml
//! preset = "fig3"
//!
//! [plant]            # m1, m2, l1, l2, q0, qdot0
//! [controller]       # law, lambda_c, lambda_c_star, gamma, theta_hat0, projection
//! [reference]        # ell, alphas, alpha, lambda, lambda_s, form, interconnection, feedback, trajectory
//! [sim]              # dt_control, dt_plant, t_end, sampling, log_every, seed
//! [tau_star]         # kind = zero | step | sinusoid | samples | file
//! [sweep]            # "section.key" = [values...], used by the sweep command only
//! ```

use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::control::{ControlGains, ControlLaw, ParameterBox};
use crate::dynamics::ManipulatorParams;
use crate::error::ConfigError;
use crate::reference::{Feedback, Interconnection, ReferenceConfig, ReferenceForm, Trajectory};
use crate::sim::{Sampling, SimConfig, TauStar};

pub const PRESETS: [&str; 5] = ["fig1", "fig2", "fig3", "fig4", "fig5"];

/// Default constant damping for the constant-gain laws; clears the gain
/// condition for the default plant with `λc = 10`.
pub const DEFAULT_LAMBDA_C_STAR: f64 = 100.0;

/// Named experiment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentPreset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl ExperimentPreset {
    pub const ALL: [ExperimentPreset; 5] = [Self::Fig1, Self::Fig2, Self::Fig3, Self::Fig4, Self::Fig5];

    pub fn name(self) -> &'static str {
        PRESETS[self as usize]
    }

    pub fn from_name(name: &str) -> Result<Self, ConfigError> {
        PRESETS
            .iter()
            .position(|p| *p == name)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
    }

    pub fn ell(self) -> usize {
        match self {
            Self::Fig1 => 1,
            Self::Fig2 | Self::Fig4 => 2,
            Self::Fig3 | Self::Fig5 => 3,
        }
    }

    pub fn form(self) -> ReferenceForm {
        match self {
            Self::Fig4 | Self::Fig5 => ReferenceForm::Modified,
            _ => ReferenceForm::Original,
        }
    }

    pub fn config(self) -> SimConfig {
        let ell = self.ell();
        let a0: f64 = 100.0;
        let alphas = match ell {
            1 => vec![a0, 2.0 * a0.sqrt()],
            2 => vec![a0, 3.0 * a0.powf(2.0 / 3.0), 3.0 * a0.powf(1.0 / 3.0)],
            _ => vec![a0, 4.0 * a0.powf(0.75), 6.0 * a0.sqrt(), 4.0 * a0.powf(0.25)],
        };
        let alpha = a0.powf(1.0 / (ell as f64 + 1.0));
        let lambda_c = 10.0;
        let law = ControlLaw::DcVariableGain;
        SimConfig {
            plant: ManipulatorParams::default(),
            q0: None,
            qdot0: None,
            law,
            gains: ControlGains { lambda_c, lambda_c_star: DEFAULT_LAMBDA_C_STAR, gamma: Matrix3::identity() * 10.0 },
            theta_hat0: Vector3::zeros(),
            projection: None,
            reference: ReferenceConfig {
                ell,
                alphas,
                alpha,
                lambda: Matrix2::identity() * alpha,
                lambda_s: 0.5,
                lambda_c,
                lambda_c_star: DEFAULT_LAMBDA_C_STAR,
                form: self.form(),
                interconnection: if ell == 1 { Interconnection::LowFreq } else { Interconnection::Full },
                feedback: law.default_feedback(),
            },
            trajectory: Trajectory::default(),
            tau_star: TauStar::Zero,
            dt_control: 0.005,
            dt_plant: 0.001,
            t_end: 20.0,
            sampling: Sampling::ZeroOrderHold,
            log_every: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub controller: ControllerSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<TauStarSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<toml::Table>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qdot0: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<ControlLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_c_star: Option<f64>,
    /// Adaptation gain, given as rows of a symmetric 3×3 matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[[f64; 3]; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_hat0: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ParameterBox>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<ReferenceForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interconnection: Option<Interconnection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<Feedback>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_control: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_plant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// `[tau_star]`: an inline signal or `kind = "file"` with a CSV `path`
/// (relative to the config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauStarSection {
    File(TauStarFile),
    Inline(TauStar),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauStarFile {
    pub kind: FileKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    File,
}

fn mat2(rows: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

fn mat3(rows: [[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections serialize to TOML")
    }

    /// Every key spelled out, no preset reference.
    pub fn from_config(cfg: &SimConfig) -> Self {
        let r = &cfg.reference;
        let g = &cfg.gains.gamma;
        let l = &r.lambda;
        ConfigFile {
            preset: None,
            plant: PlantSection {
                m1: Some(cfg.plant.m1),
                m2: Some(cfg.plant.m2),
                l1: Some(cfg.plant.l1),
                l2: Some(cfg.plant.l2),
                q0: cfg.q0.map(|v| [v[0], v[1]]),
                qdot0: cfg.qdot0.map(|v| [v[0], v[1]]),
            },
            controller: ControllerSection {
                law: Some(cfg.law),
                lambda_c: Some(cfg.gains.lambda_c),
                lambda_c_star: Some(cfg.gains.lambda_c_star),
                gamma: Some(std::array::from_fn(|i| std::array::from_fn(|j| g[(i, j)]))),
                theta_hat0: Some([cfg.theta_hat0[0], cfg.theta_hat0[1], cfg.theta_hat0[2]]),
                projection: cfg.projection,
            },
            reference: ReferenceSection {
                ell: Some(r.ell),
                alphas: Some(r.alphas.clone()),
                alpha: Some(r.alpha),
                lambda: Some([[l[(0, 0)], l[(0, 1)]], [l[(1, 0)], l[(1, 1)]]]),
                lambda_s: Some(r.lambda_s),
                form: Some(r.form),
                interconnection: Some(r.interconnection),
                feedback: Some(r.feedback),
                trajectory: Some(cfg.trajectory.clone()),
            },
            sim: SimSection {
                dt_control: Some(cfg.dt_control),
                dt_plant: Some(cfg.dt_plant),
                t_end: Some(cfg.t_end),
                sampling: Some(cfg.sampling),
                log_every: Some(cfg.log_every),
                seed: Some(cfg.seed),
            },
            tau_star: Some(TauStarSection::Inline(cfg.tau_star.clone())),
            sweep: None,
        }
    }

    /// Overlay this document on its preset. `base_dir` resolves relative
    /// `tau_star` file paths.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<SimConfig, ConfigError> {
        let preset = ExperimentPreset::from_name(self.preset.as_deref().unwrap_or("fig1"))?;
        let mut cfg = preset.config();

        let p = &self.plant;
        cfg.plant = ManipulatorParams {
            m1: p.m1.unwrap_or(cfg.plant.m1),
            m2: p.m2.unwrap_or(cfg.plant.m2),
            l1: p.l1.unwrap_or(cfg.plant.l1),
            l2: p.l2.unwrap_or(cfg.plant.l2),
        };
        if let Some(v) = p.q0 {
            cfg.q0 = Some(Vector2::from(v));
        }
        if let Some(v) = p.qdot0 {
            cfg.qdot0 = Some(Vector2::from(v));
        }

        let c = &self.controller;
        if let Some(law) = c.law {
            cfg.law = law;
            cfg.reference.feedback = law.default_feedback();
        }
        if let Some(v) = c.lambda_c {
            cfg.gains.lambda_c = v;
        }
        if let Some(v) = c.lambda_c_star {
            cfg.gains.lambda_c_star = v;
        }
        if let Some(v) = c.gamma {
            cfg.gains.gamma = mat3(v);
        }
        if let Some(v) = c.theta_hat0 {
            cfg.theta_hat0 = Vector3::from(v);
        }
        if c.projection.is_some() {
            cfg.projection = c.projection;
        }

        let r = &self.reference;
        let rc = &mut cfg.reference;
        rc.lambda_c = cfg.gains.lambda_c;
        rc.lambda_c_star = cfg.gains.lambda_c_star;
        if let Some(ell) = r.ell {
            if ell != rc.ell && r.alphas.is_none() {
                return Err(ConfigError::invalid("reference.alphas", "required when ell differs from the preset"));
            }
            rc.ell = ell;
            if ell == 1 && r.interconnection.is_none() {
                rc.interconnection = Interconnection::LowFreq;
            }
        }
        if let Some(v) = &r.alphas {
            rc.alphas = v.clone();
        }
        if let Some(v) = r.alpha {
            rc.alpha = v;
            if r.lambda.is_none() {
                rc.lambda = Matrix2::identity() * v;
            }
        }
        if let Some(v) = r.lambda {
            rc.lambda = mat2(v);
        }
        if let Some(v) = r.lambda_s {
            rc.lambda_s = v;
        }
        if let Some(v) = r.form {
            rc.form = v;
        }
        if let Some(v) = r.interconnection {
            rc.interconnection = v;
        }
        if let Some(v) = r.feedback {
            rc.feedback = v;
        }
        if let Some(v) = &r.trajectory {
            cfg.trajectory = v.clone();
        }

        let s = &self.sim;
        cfg.dt_control = s.dt_control.unwrap_or(cfg.dt_control);
        cfg.dt_plant = s.dt_plant.unwrap_or(cfg.dt_plant);
        cfg.t_end = s.t_end.unwrap_or(cfg.t_end);
        cfg.sampling = s.sampling.unwrap_or(cfg.sampling);
        cfg.log_every = s.log_every.unwrap_or(cfg.log_every);
        cfg.seed = s.seed.unwrap_or(cfg.seed);

        cfg.tau_star = match &self.tau_star {
            None => TauStar::Zero,
            Some(TauStarSection::Inline(t)) => t.clone(),
            Some(TauStarSection::File(f)) => {
                let path = match base_dir {
                    Some(dir) if f.path.is_relative() => dir.join(&f.path),
                    _ => f.path.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ConfigError::invalid("tau_star.path", format!("{}: {e}", path.display())))?;
                TauStar::from_csv(&text).map_err(|e| ConfigError::invalid("tau_star.path", e))?
            }
        };

        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    ConfigFile::parse(text)?.resolve(None)
}

pub fn load_config(path: &Path) -> Result<(ConfigFile, SimConfig), ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::invalid("--config", format!("{}: {e}", path.display())))?;
    let file = ConfigFile::parse(&text)?;
    let cfg = file.resolve(path.parent())?;
    Ok((file, cfg))
}

pub fn serialize_config(cfg: &SimConfig) -> String {
    ConfigFile::from_config(cfg).to_toml()
}

/// One point of a parameter sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Deterministic label built from the grid values, e.g. `reference.lambda_s=0.5`.
    pub name: String,
    pub config: Result<SimConfig, ConfigError>,
}

/// Expand the `[sweep]` table (dotted key → list of values) into the
/// Cartesian product of configurations. Keys vary in sorted order, the
/// last key fastest.
pub fn expand_sweep(text: &str, base_dir: Option<&Path>) -> Result<Vec<SweepPoint>, ConfigError> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    let grid = match doc.remove("sweep") {
        Some(toml::Value::Table(t)) => t,
        Some(_) => return Err(ConfigError::invalid("sweep", "must be a table")),
        None => return Err(ConfigError::invalid("sweep", "missing [sweep] table")),
    };
    let mut axes: Vec<(String, Vec<toml::Value>)> = Vec::new();
    for (key, values) in grid {
        match values {
            toml::Value::Array(v) if !v.is_empty() => axes.push((key, v)),
            _ => return Err(ConfigError::invalid(format!("sweep.{key}"), "must be a non-empty array")),
        }
    }
    let mut points = vec![(Vec::<String>::new(), doc)];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for (labels, base) in &points {
            for v in values {
                let mut d = base.clone();
                set_dotted(&mut d, key, v.clone())?;
                let mut l = labels.clone();
                l.push(format!("{key}={v}"));
                next.push((l, d));
            }
        }
        points = next;
    }
    Ok(points
        .into_iter()
        .map(|(labels, d)| {
            let config = toml::Value::Table(d)
                .try_into::<ConfigFile>()
                .map_err(|e| ConfigError::Parse(e.to_string()))
                .and_then(|f| f.resolve(base_dir));
            SweepPoint { name: labels.join(","), config }
        })
        .collect())
}

fn set_dotted(doc: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| ConfigError::invalid(key, "empty key"))?;
    let mut table = doc;
    for p in parts {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| ConfigError::invalid(key, "path crosses a non-table value"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_fig1() {
        assert_eq!(parse_config("").unwrap(), ExperimentPreset::Fig1.config());
    }

    #[test]
    fn preset_reference_is_verbatim() {
        for p in ExperimentPreset::ALL {
            assert_eq!(parse_config(&format!("preset = \"{}\"", p.name())).unwrap(), p.config());
        }
    }

    #[test]
    fn round_trip_every_preset() {
        for p in ExperimentPreset::ALL {
            let cfg = p.config();
            let text = serialize_config(&cfg);
            assert_eq!(parse_config(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config("[controller]\nlamda_c = 3.0\n").unwrap_err();
        assert!(err.to_string().contains("lamda_c"), "{err}");
        assert!(parse_config("bogus = 1").is_err());
    }

    #[test]
    fn negative_alpha_rejected_by_hurwitz() {
        let err = parse_config("[reference]\nalphas = [100.0, -20.0]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Hurwitz(_)), "{err}");
    }

    #[test]
    fn gain_condition_is_enforced_for_constant_gain() {
        let ok = parse_config("[controller]\nlaw = \"dc_constant_gain\"\n").unwrap();
        assert_eq!(ok.reference.feedback, Feedback::ConstantGain);
        let err = parse_config("[controller]\nlaw = \"dc_constant_gain\"\nlambda_c_star = 50.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::GainCondition { .. }), "{err}");
    }

    #[test]
    fn inline_tau_star() {
        let cfg = parse_config("[tau_star]\nkind = \"step\"\nvalue = [1.0, 2.0]\nt_on = 15.0\n").unwrap();
        assert_eq!(cfg.tau_star, TauStar::Step { value: [1.0, 2.0], t_on: 15.0 });
        assert!(parse_config("[tau_star]\nkind = \"step\"\nvalue = [1.0, 2.0]\n").is_err());
    }

    #[test]
    fn sweep_expands_in_order_and_keeps_rejected_points() {
        let text = "preset = \"fig2\"\n[sweep]\n\"reference.lambda_s\" = [0.1, 0.5]\n\"reference.alphas\" = [[100.0, 64.6, 13.9], [100.0, -1.0, 13.9]]\n";
        let pts = expand_sweep(text, None).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts[0].name.ends_with("reference.lambda_s=0.1"), "{}", pts[0].name);
        assert!(pts[0].config.is_ok());
        assert_eq!(pts[1].config.as_ref().unwrap().reference.lambda_s, 0.5);
        assert!(matches!(pts[2].config, Err(ConfigError::Hurwitz(_))));
        assert!(matches!(pts[3].config, Err(ConfigError::Hurwitz(_))));
    }
}
