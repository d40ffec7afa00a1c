use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FriaError {
    /// An argument is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exact integer computation would exceed the 64-bit range.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iterative solver did not converge.
    #[error("solver error: {message} (state: {state})")]
    Solver { message: String, state: String },

    /// A numerical procedure (quadrature, differencing, extraction) missed its tolerance.
    #[error("numeric error: {message} (achieved {achieved:.3e})")]
    Numeric { message: String, achieved: f64 },

    /// Reading configuration or writing an artifact failed.
    #[error("io error: {0}")]
    Io(String),
}

impl FriaError {
    pub fn domain(msg: impl Into<String>) -> Self {
        FriaError::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, achieved: f64) -> Self {
        FriaError::Numeric { message: msg.into(), achieved }
    }

    pub fn solver(msg: impl Into<String>, state: impl Into<String>) -> Self {
        FriaError::Solver { message: msg.into(), state: state.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        FriaError::Io(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            FriaError::Domain(_) | FriaError::Capacity(_) => 2,
            FriaError::Solver { .. } | FriaError::Numeric { .. } => 3,
            FriaError::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, FriaError>;
