use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse {kind} `{input}`: {reason}")]
    Parse {
        kind: &'static str,
        input: String,
        reason: String,
    },

    #[error("strategy contract violation: {0}")]
    ContractViolation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// No candidate exponent produced an implied density inside `[1/B, B]`.
    #[error("model selection failed: no candidate density in [1/{bound}, {bound}], falling back to m = {fallback}")]
    ModelSelection { bound: f64, fallback: u32 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(kind: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            kind,
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Output(e.to_string())
    }
}
