use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or solution document does not match its schema.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    /// A structurally valid scenario violates a model invariant.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("undefined Leontief rate: demand vector has no positive entry")]
    UndefinedRate,

    #[error("energy evaluated at negative usage {0}")]
    NegativeUsage(f64),

    #[error("negative multiplier {name} = {value}")]
    NegativeMultiplier { name: String, value: f64 },

    #[error("scenario under-constrained: SP {sp} has a free option (l={location}, c={facility})")]
    FreeOption {
        sp: usize,
        location: usize,
        facility: usize,
    },

    #[error("solver finished with status {status:?}: {detail}")]
    Solver {
        status: crate::convex::Status,
        detail: String,
    },

    #[error("sweep point {param}={value}: {source}")]
    SweepPoint {
        param: String,
        value: String,
        #[source]
        source: Box<Error>,
    },

    #[error("verification failed at {param}={value}: {detail}")]
    SweepVerification {
        param: String,
        value: String,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
