//! Incompatibility of multiparameter quantum estimation.
//!
//! The crate builds unitary statistical models under depolarizing noise,
//! computes symmetric logarithmic derivatives, the quantum Fisher
//! information and the commutator matrix, and evaluates the
//! Holevo-Cramér-Rao bound and the incompatibility figure `I(θ)` with its
//! own semidefinite programming solver.

pub mod cli;
pub mod designs;
pub mod error;
pub mod estimation;
pub mod holevo;
pub mod matcore;
pub mod model;
pub mod numerics;
pub mod sdp;
pub mod sweep;

pub use error::{Error, Result};
