use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("the law of X_t has no density for this model: {0}")]
    NoDensity(String),

    #[error("operation requires a bounded-variation model: {0}")]
    WrongModel(String),

    #[error("quadrature failed to reach tolerance: estimate {value:e}, error {abs_error:e} after {intervals} intervals")]
    Quadrature {
        value: f64,
        abs_error: f64,
        intervals: usize,
    },

    #[error("Fourier inversion inaccurate: {0}")]
    Inversion(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("endpoint -x = {x} not reachable: need x < c t = {ct}")]
    InfeasibleEndpoint { x: f64, ct: f64 },

    #[error("simulation horizon {horizon} exhausted before the level was reached")]
    HorizonExhausted { horizon: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::Inversion(_)
                | Error::NonConvergence { .. }
                | Error::HorizonExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
