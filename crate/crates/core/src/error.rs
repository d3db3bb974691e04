use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed record in an input or dataset file.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("unknown semantic type {0:?}")]
    UnknownSemType(String),

    #[error("fine type {0:?} has no mapping to a target type")]
    UnmappedType(String),

    #[error("no concept registered for type {0:?}")]
    UnregisteredType(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("term {0:?} not present in embedding table")]
    UnknownTerm(String),

    #[error("graph is disconnected; bipartition requires a connected component")]
    Disconnected,

    #[error("bipartition requires at least two nodes, got {0}")]
    TooSmall(usize),

    #[error("cluster is empty")]
    EmptyCluster,

    #[error("type distribution has zero total count")]
    NoEvidence,

    #[error("{0} types selected; at most 3 can reach a third of the total")]
    TooManyTypes(usize),

    #[error("term {0:?} has a prediction count of zero")]
    ZeroPredictions(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("dangling references: {}", .0.join(", "))]
    DanglingReferences(Vec<String>),

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config: {0}")]
    Config(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// True for errors caused by invalid configuration or input validation
    /// rather than a failing stage.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
