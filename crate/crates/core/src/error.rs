use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid system configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("invalid impairment: {0}")]
    InvalidImpairment(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(
        "closed-form cross-check failed for user {user} at gamma {gamma}: \
         direct {direct:e} vs multinomial {multinomial:e}"
    )]
    CrossCheck { user: usize, gamma: f64, direct: f64, multinomial: f64 },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse experiment spec: {0}")]
    Parse(String),
    #[error("experiment spec is invalid:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("{context}: {source}")]
    Model { context: String, source: ModelError },
}

impl SpecError {
    pub(crate) fn model(context: impl Into<String>, source: ModelError) -> Self {
        Self::Model { context: context.into(), source }
    }
}
