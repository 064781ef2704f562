use thiserror::Error;

/// Errors raised by the laboratory. Every variant maps onto one CLI exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("numerical error: {msg} (residual {residual:e})")]
    Numerical { msg: String, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
}

impl LabError {
    pub fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>, residual: f64) -> Self {
        LabError::Numerical {
            msg: msg.into(),
            residual,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
