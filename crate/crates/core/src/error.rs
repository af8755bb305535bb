use thiserror::Error;

/// Errors produced by the dyadic toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("depth {0} outside [1, 24]")]
    DepthOutOfRange(u32),

    #[error("expected {expected} leaf values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at leaf {0}")]
    NonFinite(usize),

    #[error("weight is not strictly positive at leaf {0}")]
    NonPositive(usize),

    #[error("negative value at leaf {0}")]
    Negative(usize),

    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(u32, u32),

    #[error("node is not internal")]
    NotInternal,

    #[error("{0}")]
    InvalidParameter(String),

    #[error("dense evaluation limited to depth <= {max}, got {depth}")]
    DenseTooLarge { depth: u32, max: u32 },

    #[error("operator is not linear; use a lower-bound estimator")]
    NotLinear,

    #[error("unknown check id `{0}`")]
    UnknownCheck(String),

    #[error("fit needs at least 3 distinct points, got {0}")]
    DegenerateFit(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
