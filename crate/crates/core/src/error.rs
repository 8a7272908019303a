use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {coords:?} lies outside the domain of {what}")]
    OutOfDomain { what: String, coords: Vec<f64> },

    #[error("derivative oracle failed for {partial}: {reason}")]
    Derivative { partial: String, reason: String },

    #[error("extrapolation did not converge: {0}")]
    Convergence(String),

    #[error("limit does not exist: {0}")]
    LimitDoesNotExist(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("quadrature too coarse: {0}")]
    Quadrature(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("leading area component is not monotone: {0}")]
    NotMonotone(String),

    #[error("sampler failed for {diagram}: {reason}")]
    Sampler { diagram: String, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
