use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape `{shape}` with h = {h} has no interior nodes; refine the grid")]
    EmptyInterior { shape: String, h: f64 },

    #[error("shape `{shape}` with h = {h} has a disconnected interior ({components} components)")]
    DisconnectedInterior {
        shape: String,
        h: f64,
        components: usize,
    },

    #[error(
        "ball radius eps = {eps} is smaller than the grid spacing h = {h} (eps >= h is required)"
    )]
    StencilTooSmall { eps: f64, h: f64 },

    #[error("node {node} is not an interior node")]
    NotInterior { node: usize },

    #[error("non-finite value {value} for {what} at {location}")]
    NonFinite {
        what: &'static str,
        location: String,
        value: f64,
    },

    #[error("point {point:?} is outside the evaluation domain of `{entry}`")]
    OutsideDomain {
        entry: &'static str,
        point: Vec<f64>,
    },

    #[error("gradient magnitude {magnitude:e} is below the critical-point guard {threshold:e}")]
    CriticalPoint { magnitude: f64, threshold: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("comparison principle violated: {0}")]
    OrderingViolation(String),

    #[error("energy overflow at p = {p}; use the mean-value solver for very large exponents (supported range 2 <= p <= 64)")]
    Overflow { p: f64 },

    #[error("strategy `{strategy}` produced a move of length {length} > eps = {eps}")]
    IllegalMove {
        strategy: String,
        length: f64,
        eps: f64,
    },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
