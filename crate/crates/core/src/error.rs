use crate::catalog::Category;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("zero-norm vector")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid blend weights: alpha={alpha}, beta={beta}")]
    InvalidBlendWeights { alpha: f64, beta: f64 },

    #[error("empty text: nothing to embed")]
    EmptyText,

    #[error("no embedding available for text {0:?}")]
    UnknownText(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("duplicate item id {0:?}")]
    DuplicateId(String),

    #[error("unknown item id {0:?}")]
    UnknownItem(String),

    #[error("unknown occasion {0:?}")]
    UnknownOccasion(String),

    #[error("slot {0} is the anchor's own category")]
    SlotIsAnchorCategory(Category),

    #[error("unfillable slot: {0}")]
    UnfillableSlot(Category),

    #[error("outfit has no filled slots")]
    EmptyOutfit,

    #[error("item has no style tags")]
    NoStyleTags,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index file: {0}")]
    IndexFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }
}
