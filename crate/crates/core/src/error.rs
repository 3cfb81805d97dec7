use thiserror::Error;

use crate::sdp::SdpStatus;

/// Errors produced by the numerical kernel, model construction and the bounds.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    /// The derivative of the state has weight outside the support of the state,
    /// so the quantum Fisher information diverges.
    #[error("model is not differentiable on the support of rho (off-support norm {0:.3e})")]
    ModelNotDifferentiable(f64),

    #[error("quantum Fisher information is singular (min eigenvalue {min:.3e}, norm {norm:.3e})")]
    SingularFisher { min: f64, norm: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("commutator matrix vanishes; every weight matrix is optimal")]
    NoIncompatibility,

    #[error("generators commute; the model is already compatible and no construction is needed")]
    NoConstructionNeeded,

    #[error("semidefinite program stopped with status {0:?}")]
    Solver(SdpStatus),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
