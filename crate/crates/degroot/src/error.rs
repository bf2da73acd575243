use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by construction, simulation, estimation and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid influence matrix: {reason}")]
    InvalidMatrix { reason: String },

    #[error("row {row} sums to {sum} which is outside the renormalization band")]
    RowSum { row: usize, sum: f64 },

    #[error("resistance value {value} at node {node} is outside the open interval (0, 1)")]
    InvalidResistance { node: usize, value: f64 },

    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },

    #[error("index out of range: {context} ({index} >= {len})")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    #[error("weight matrix is reducible; a single consensus value is not guaranteed")]
    Reducible,

    #[error("no convergence within {cap} iterations ({context})")]
    NonConvergence { context: &'static str, cap: usize },

    #[error("trajectory has {len} states; at least {min} are required")]
    TrajectoryTooShort { len: usize, min: usize },

    #[error("node {node} is missing an opinion for positive-weight neighbor {neighbor}")]
    MissingNeighborOpinion { node: usize, neighbor: usize },

    #[error("node {node} has status {status:?}; weight reconstruction requires status ok")]
    NotOkEstimate { node: usize, status: crate::estimator::EstimateStatus },

    #[error("report mode mismatch: {reason}")]
    ReportMode { reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("config error in {path}: {reason}")]
    Config { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid_matrix(reason: impl Into<String>) -> Self {
        Error::InvalidMatrix {
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid_parameter(reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }
}
