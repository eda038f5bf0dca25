use std::path::PathBuf;

use thiserror::Error;

/// Broad class of a failure; front ends map these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration.
    Usage,
    /// Unreadable, malformed or out-of-domain input data.
    Data,
    /// A numerical routine could not produce a result.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse { row: usize, column: String, value: String },
    #[error("row {row}, column {column}: value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("data set has no rows")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("neighborhood size {requested} outside 1..={available}")]
    NeighborCount { requested: usize, available: usize },

    #[error("normalized distance {0} outside [0, 1]")]
    DistanceOutOfRange(f64),
    #[error("bandwidth in dimension {dim} is not strictly positive")]
    NonPositiveBandwidth { dim: usize },
    #[error("zero sample variance in dimension {dim}")]
    ZeroVariance { dim: usize },
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("every cross-validation candidate has log-density -inf")]
    DegenerateCrossValidation,
    #[error("marginal density is zero at the query point")]
    ZeroMarginal,
    #[error("density bandwidths were not resolved for a density-weighted fit")]
    UnresolvedBandwidth,

    #[error("weighted design is rank deficient at degree 0")]
    RankDeficient,
    #[error("quadrature did not converge (error estimate {estimate:e}, target {target:e})")]
    Quadrature { estimate: f64, target: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. }
            | Csv(_)
            | Header(_)
            | Parse { .. }
            | NonFinite { .. }
            | Empty
            | Shape(_)
            | Dimension { .. }
            | DistanceOutOfRange(_)
            | ZeroMarginal => ErrorKind::Data,
            NonPositiveBandwidth { .. }
            | ZeroVariance { .. }
            | TooFewSamples { .. }
            | DegenerateCrossValidation
            | UnresolvedBandwidth
            | RankDeficient
            | Quadrature { .. } => ErrorKind::Numerical,
            NeighborCount { .. } | InvalidParameter(_) | InvalidConfig(_) => ErrorKind::Usage,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
