use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A tracked argument jumped by more than the allowed step; the caller
    /// must evaluate at a point closer to the previous one.
    #[error("branch tracking lost: phase step {step:.3} rad at z = {at}")]
    BranchStep { at: Complex64, step: f64 },

    #[error("adaptive refinement exceeded depth {depth} near s = {s}")]
    RefinementDepth { s: f64, depth: u32 },

    #[error("evaluation at singular point z = {0}")]
    Singular(Complex64),

    #[error("seed at s = {s} does not decay (growth indicator {indicator:.3e})")]
    NonDecayingSeed { s: f64, indicator: f64 },

    #[error("integrator failed at s = {s}: {reason}")]
    Integration { s: f64, reason: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
