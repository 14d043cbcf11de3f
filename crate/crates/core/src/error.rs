use thiserror::Error;

/// Errors raised by the toolkit. Every variant is a domain error; I/O is left
/// to callers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown constructor `{0}`")]
    UnknownConstructor(String),
    #[error("ambiguous constructor `{0}`, qualify it as Type.Ctor")]
    AmbiguousConstructor(String),
    #[error("duplicate constructor `{0}`")]
    DuplicateConstructor(String),
    #[error("duplicate type `{0}`")]
    DuplicateType(String),
    #[error("type `{name}` expects {expected} argument(s), found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("type variable `{var}` is not a parameter of `{decl}`")]
    UnboundVariable { var: String, decl: String },
    #[error("unsupported declaration: {0}")]
    Unsupported(String),
    #[error("type `{0}` is not part of the root's recursive family")]
    NotInFamily(String),
    #[error("cycle among types outside the family: {0}")]
    ForeignCycle(String),
    #[error("missing probability for constructor `{0}`")]
    MissingProbability(String),
    #[error("invalid probability map: {0}")]
    InvalidProbMap(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("type `{0}` has no terminal constructor, generation cannot stop")]
    NoTerminal(String),
    #[error("invalid chi-square input: {0}")]
    ChiSquare(String),
    #[error("invalid constraint: {0}")]
    Constraint(String),
    #[error("invalid cost function syntax: {0}")]
    CostSyntax(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("generator spec does not match universe: {0}")]
    SpecMismatch(String),
    #[error("ill-typed value: {0}")]
    IllTyped(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
