use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("wavenumber |p| = {norm:.6} exceeds the grid Nyquist limit {nyquist:.6}")]
    BeyondNyquist { norm: f64, nyquist: f64 },

    #[error("(p, E, rho) is not admissible: p^2 = {p_squared:.6} > 4(E + rho^2) = {limit:.6}")]
    Inadmissible { p_squared: f64, limit: f64 },

    #[error("schedule not admissible: kappa^2 = {kappa_squared:.6} > 4(E + rho^2) = {limit:.6}; use a smaller epsilon")]
    ScheduleInadmissible { kappa_squared: f64, limit: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("sampling mismatch: {0}")]
    SamplingMismatch(String),

    #[error("verification precondition failed: {0}")]
    Precondition(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    /// True for errors raised by an iterative solve.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NotConverged { .. })
    }
}
