use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("inertia matrix is not positive definite")]
    SingularInertia,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("Hurwitz condition violated: {0}")]
    Hurwitz(String),
    #[error("gain condition lambda_c_star > lambda_c * lambda_max(M) / 4 violated: lambda_c_star = {lambda_c_star} must exceed {threshold}")]
    GainCondition { lambda_c_star: f64, threshold: f64 },
    #[error("reference realization of degree {expected} called with a degree-{found} configuration")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("config parse error: {0}")]
    Parse(String),
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid { key: key.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticError {
    #[error("log has {len} rows, the finite-difference stencil needs at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("remainder order must be 1, 2 or 3, got {0}")]
    UnsupportedOrder(usize),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}
