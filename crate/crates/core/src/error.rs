use thiserror::Error;

/// Failures reported by the numerical kernels and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("degenerate principal part: {0}")]
    Degenerate(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("perturbation left the guarded domain: {0}")]
    Guard(String),
    #[error("missing dependency: {0}")]
    Dependency(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("bracket error: {0}")]
    Bracket(String),
    #[error("amplitude error: {0}")]
    Amplitude(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported derivative order: {0}")]
    Order(String),
    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
