use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid dendrogram: {0}")]
    Dendrogram(String),

    #[error("invalid similarity data: {0}")]
    Similarity(String),

    #[error("quality function undefined: {0}")]
    Quality(String),

    #[error("invalid piecewise-affine function: {0}")]
    Envelope(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration refused: {0} partitions exceed the guard of {1}")]
    EnumerationGuard(u128, u128),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
