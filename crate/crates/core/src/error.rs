use thiserror::Error;

/// A single validation failure, addressed by the path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: String, expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigenvalue solve did not converge for {0}")]
    EigenSolve(&'static str),

    #[error("filter matrix F is not Schur stable (spectral radius {spectral_radius:.6})")]
    UnstableFilter { spectral_radius: f64 },

    #[error("positive-definite solve failed for {0}")]
    Solve(&'static str),

    #[error("overflow guard tripped: {quantity} reached {value:e} (cap {cap:e})")]
    Overflow { quantity: &'static str, value: f64, cap: f64 },

    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn mismatch(what: impl Into<String>, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        what: what.into(),
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
