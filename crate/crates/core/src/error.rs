use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Cholesky factorization failed even with the largest nugget.
    #[error("numerical failure: {message} (last nugget tried: {nugget:e})")]
    Numerical { message: String, nugget: f64 },

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("MCMC initialization failed: {0}")]
    Initialization(String),

    #[error("state mismatch: {0}")]
    StateMismatch(String),

    /// `path` names the offending field; the source carries line and column.
    #[error("failed to parse {what} at `{path}`: {source}")]
    Parse {
        what: String,
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } | Error::Initialization(_) => 3,
            Error::StateMismatch(_) => 4,
            _ => 2,
        }
    }
}

/// Deserializes JSON, reporting the path of the field that failed.
pub fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        what: what.to_string(),
        path: e.path().to_string(),
        source: e.into_inner(),
    })
}
