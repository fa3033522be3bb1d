use std::path::PathBuf;

/// Everything that can go wrong while loading data, training or scoring.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch ({detail})")]
    Shape { op: &'static str, detail: String },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("loss over an empty edge set")]
    EmptyEdgeSet,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus line {line}: {msg}")]
    CorpusLine { line: usize, msg: String },

    #[error("duplicate doc_id `{0}`")]
    DuplicateDoc(String),

    #[error("bank at byte offset {offset}: {msg}")]
    BankFormat { offset: u64, msg: String },

    #[error("checkpoint at byte offset {offset}: {msg}")]
    CheckpointFormat { offset: u64, msg: String },

    #[error("bank does not match document `{doc_id}`: {msg}")]
    BankMismatch { doc_id: String, msg: String },

    #[error("document `{0}` is not present in the bank")]
    MissingDocument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("training failed at epoch {epoch}, batch {batch}: {msg}")]
    Training { epoch: usize, batch: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
