use thiserror::Error;

/// Errors raised by the analytic machinery and the simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Root finding, polishing or a linear solve did not reach the required accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The Cauchy-Schwarz upper bound is only finite when mu > 2 beta,
    /// i.e. lambda > 4 pi k L (near field).
    #[error(
        "upper bound undefined: requires mu > 2*beta (lambda > 4*pi*k*L, near field); got mu = {mu}, beta = {beta}"
    )]
    UpperBoundInvalid { mu: f64, beta: f64 },

    #[error("singular two-sided system for h = {h}, alpha = {alpha}")]
    SingularSystem { h: f64, alpha: f64 },

    /// Starting depth is beyond the slab height; the ray passes straight through.
    #[error("projected depth {depth} exceeds slab height {h}")]
    PassThrough { depth: f64, h: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
