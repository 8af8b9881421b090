//! Crate-wide error type.
//!
//! Truncation exits are deliberately distinct from "the operator annihilated
//! the state": the latter is a physical zero, the former means the requested
//! object does not fit in the chosen mode window.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A ladder index or a shifted mode left the window `[-n_cut, n_cut]`.
    #[error("mode {mode} outside window [-{n_cut}, {n_cut}]")]
    OutOfWindow { mode: i32, n_cut: i32 },

    /// The gauge shift pushed an occupied mode out of the window; the image
    /// state is not representable at this cutoff.
    #[error("gauge image not representable: mode {mode} leaves window [-{n_cut}, {n_cut}]")]
    GaugeTruncated { mode: i32, n_cut: i32 },

    #[error("quadrature stalled at error {achieved:e} (requested {requested:e})")]
    QuadratureTolerance { achieved: f64, requested: f64 },

    #[error("limit extrapolation failed: {context}; sequence {sequence:?}")]
    Extrapolation { context: String, sequence: Vec<f64> },

    #[error("eigensolver did not converge; best residuals {residuals:?}")]
    SolverConvergence { residuals: Vec<f64> },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
