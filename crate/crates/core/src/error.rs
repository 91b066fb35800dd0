use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("geodesic step of length {length} exceeds the admissible maximum {max}")]
    StepTooLarge { length: f64, max: f64 },

    #[error("density is not positive at {coords:?} (value {value})")]
    NonPositiveDensity { coords: [f64; 2], value: f64 },

    #[error("point {coords:?} is not a member of the configuration")]
    NotAMember { coords: [f64; 2] },

    #[error("point {coords:?} is already a member of the configuration")]
    AlreadyAMember { coords: [f64; 2] },

    #[error("tangent data belongs to a different configuration")]
    MismatchedConfiguration,

    #[error("invalid chart coordinates {coords:?}: {reason}")]
    InvalidPoint { coords: [f64; 2], reason: &'static str },

    #[error("configuration sampling failed: {0}")]
    Sampling(String),

    #[error("series truncation K={k} leaves tail bound {tail:e} above tolerance {tol:e}")]
    TruncationTooSmall { k: usize, tail: f64, tol: f64 },

    #[error("two-form carries no analytic slice data")]
    MissingSliceData,

    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
