use thiserror::Error;

/// Errors produced by the group, measure, convolution, profile and
/// experiment layers.
#[derive(Debug, Error)]
pub enum RwError {
    /// Two elements or measures living on different groups were combined.
    #[error("descriptor mismatch: {left} vs {right}")]
    DescriptorMismatch { left: String, right: String },

    /// An enumeration or solver budget was exhausted.  For ball
    /// enumeration `completed` carries the largest fully enumerated radius.
    #[error("resource budget exceeded in {what} (completed: {completed:?})")]
    Resource { what: String, completed: Option<u64> },

    /// Eigenvalue iteration failed to converge; carries the last Rayleigh
    /// quotient and residual for diagnostics.
    #[error("eigenvalue iteration did not converge: rayleigh={rayleigh}, residual={residual}")]
    EigenNoConvergence { rayleigh: f64, residual: f64 },

    /// Numerical failure (quadrature, inversion) with a diagnostic message.
    #[error("numeric error in {context}: {message}")]
    Numeric { context: String, message: String },

    /// A mathematically invalid input (empty profile curve, non-positive
    /// values where positivity is required, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Config or descriptor text that does not parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// A decay fit was refused because a precondition failed; the message
    /// names the violated precondition.
    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl RwError {
    pub fn mismatch(left: impl ToString, right: impl ToString) -> Self {
        RwError::DescriptorMismatch { left: left.to_string(), right: right.to_string() }
    }

    /// Exit code used by the experiment runner for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            RwError::Resource { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, RwError>;
