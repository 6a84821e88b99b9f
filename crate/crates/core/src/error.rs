use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The state (or the state an operation would produce) does not fit in the
    /// truncated Fock space.
    #[error("truncation: {what} (dim = {dim}, tail population = {tail:.3e})")]
    Truncation { what: String, dim: usize, tail: f64 },

    /// The integrator lost norm beyond tolerance.
    #[error("integration step error: norm drift {drift:.3e} at t = {time:.6e} s")]
    Step { drift: f64, time: f64 },

    #[error("ill-conditioned problem: condition number {condition:.3e} exceeds {limit:.1e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("no threshold: fidelity {fidelity:.6} < {f_min} already at T_p = {t_p:.3e} s")]
    NoThreshold { fidelity: f64, f_min: f64, t_p: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// `true` for errors caused by bad inputs rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_))
    }
}
