use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A coefficient or datum evaluated to a non-finite value.
    Evaluation { what: &'static str, x: f64 },
    /// An argument is outside its admissible range.
    Parameter(String),
    /// Adaptive step size collapsed.
    Integration { x: f64, step: f64 },
    /// The phase condition could not be bracketed or solved.
    Spectral { n: usize, reason: String },
    /// Inputs do not belong together (grid/basis mismatch, wrong lengths).
    Usage(String),
    /// The requested quantity needs regularity the inputs do not have.
    Capability(String),
    /// Time grid too coarse for a mode.
    Resolution { mode: usize, required_step: f64, step: f64 },
    /// Finite-difference reference failure.
    Oracle(String),
    /// Regression over an ε-ladder failed.
    Fit(String),
    /// Failure while computing mode `n`.
    Mode { n: usize, source: Box<Error> },
    /// Failure while solving the regularized problem at `eps`.
    Net { eps: f64, source: Box<Error> },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Evaluation { what, x } => write!(f, "{what} is not finite at x = {x}"),
            Error::Parameter(m) => write!(f, "invalid parameter: {m}"),
            Error::Integration { x, step } => {
                write!(f, "step size underflow at x = {x} (h = {step:e})")
            }
            Error::Spectral { n, reason } => write!(f, "eigenvalue {n}: {reason}"),
            Error::Usage(m) => write!(f, "usage error: {m}"),
            Error::Capability(m) => write!(f, "unsupported: {m}"),
            Error::Resolution {
                mode,
                required_step,
                step,
            } => write!(
                f,
                "time grid too coarse for mode {mode}: step {step:e} > {required_step:e}"
            ),
            Error::Oracle(m) => write!(f, "oracle failure: {m}"),
            Error::Fit(m) => write!(f, "fit failure: {m}"),
            Error::Mode { n, source } => write!(f, "mode {n}: {source}"),
            Error::Net { eps, source } => write!(f, "eps = {eps:e}: {source}"),
        }
    }
}

impl core::error::Error for Error {}
