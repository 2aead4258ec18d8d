use thiserror::Error;

/// Errors raised while loading, labeling, evaluating or meta-evaluating.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// A malformed line or record. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate entry for query {qid}, document {doc_id}")]
    DuplicateEntry { qid: String, doc_id: String },

    #[error("line {line}: conflicting duplicate for query {qid}, document {doc_id}")]
    ConflictingDuplicate {
        line: usize,
        qid: String,
        doc_id: String,
    },

    #[error("record {record}: {message}")]
    Record { record: usize, message: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown document {0}")]
    UnknownDocument(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A model-backed labeler has no score for these (qid, doc_id) pairs.
    #[error("{} hole(s) have no score", .0.len())]
    MissingScores(Vec<(String, String)>),

    #[error("cannot overwrite the known relevant document {doc_id} of query {qid}")]
    OverwritesKnownRelevant { qid: String, doc_id: String },

    #[error("statistic undefined: {0}")]
    Undefined(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
