use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("svd did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    SvdNoConvergence { sweeps: usize, residual: f64 },

    #[error("measurements are not in the range of the operator (residual {residual:e} > {tol:e})")]
    Infeasible { residual: f64, tol: f64 },

    #[error("linear program: {0}")]
    Lp(String),
}

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn dim<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
