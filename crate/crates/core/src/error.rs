use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point} lies outside {domain}")]
    OutsideDomain { domain: String, point: String },

    #[error("point {0} lies on the branch cut of the square root")]
    BranchCut(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Dirichlet series evaluated at Re(s) = {re} <= abscissa {abscissa}")]
    Divergence { re: f64, abscissa: f64 },

    #[error("integration exhausted {max_steps} steps at t = {t}")]
    StepLimit { max_steps: usize, t: f64 },

    #[error("trajectory left the domain near {point} at t = {t}")]
    ExitedDomain { point: String, t: f64 },

    #[error("step size underflow at t = {t} near {point}")]
    StepUnderflow { point: String, t: f64 },

    #[error("at {point}: {source}")]
    AtPoint { point: String, source: Box<Error> },

    #[error("unknown identifier: {0}")]
    UnknownId(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
