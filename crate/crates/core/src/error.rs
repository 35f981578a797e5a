use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("solver did not converge: {what} after {iterations} iterations (residual {residual:e})")]
    Solver {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("eigenvalue estimate did not converge after {iterations} iterations (last quotient {last_quotient:e})")]
    Estimate { iterations: usize, last_quotient: f64 },

    #[error("instability at step {step} (t = {time}): max |u| = {max_abs:e}")]
    Instability { step: usize, time: f64, max_abs: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("sweep failed at resolution {resolution}: {source}")]
    Sweep {
        resolution: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }
}
