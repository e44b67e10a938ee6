use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: itemset with {size} items is not supported (single-item events only)")]
    UnsupportedFormat { line: usize, size: usize },

    #[error("attribute coverage: {0}")]
    Coverage(String),

    #[error("ordering attribute `{attr}` is not strictly increasing in sequence {sid} at position {pos}")]
    Ordering { attr: String, sid: u32, pos: usize },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid constraint `{text}`: {msg}")]
    ConstraintSyntax { text: String, msg: String },

    #[error("constraint is undefined on an empty occurrence")]
    EmptyOccurrence,

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("mdd validation failed: {0}")]
    Validation(String),
}
