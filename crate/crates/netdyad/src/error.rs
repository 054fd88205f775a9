//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An edge list violated the simple-graph invariants.
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// A dyad or node id was out of range.
    #[error("invalid id: {0}")]
    InvalidId(String),

    /// A generator specification was rejected before sampling.
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),

    /// Regression inputs failed validation (dimensions, finiteness, groups).
    #[error("invalid regression data: {0}")]
    InvalidData(String),

    /// The cross-product matrix is numerically singular.
    #[error(
        "design matrix is rank deficient: smallest singular value {min_singular:.3e}, \
         condition number {condition:.3e} exceeds bound {bound:.3e}"
    )]
    RankDeficient {
        min_singular: f64,
        condition: f64,
        bound: f64,
    },

    /// A variance-estimator argument was rejected.
    #[error("invalid variance argument: {0}")]
    InvalidVariance(String),

    /// A coordinate of the variance matrix is negative; interval construction
    /// needs an eigenvalue repair first.
    #[error(
        "variance entry ({coord},{coord}) is negative ({value:.3e}); \
         apply repair_psd before building confidence intervals"
    )]
    NegativeVariance { coord: usize, value: f64 },

    /// A Monte Carlo study could not produce any usable replication.
    #[error("monte carlo failure: {0}")]
    MonteCarlo(String),

    /// A CSV or config file failed to parse; carries file/line context.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: &str, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &str, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}
