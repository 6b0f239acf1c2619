use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// What went wrong while reading a Newick string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedEnd,
    UnexpectedChar(char),
    NonBinary,
    InternalLabel,
    BranchLength,
    DuplicateTaxon(String),
    MissingSemicolon,
    TrailingInput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => write!(f, "empty input"),
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::NonBinary => write!(f, "non-binary node"),
            ParseErrorKind::InternalLabel => write!(f, "internal node labels are not allowed"),
            ParseErrorKind::BranchLength => write!(f, "branch lengths are not allowed"),
            ParseErrorKind::DuplicateTaxon(t) => write!(f, "duplicate taxon `{t}`"),
            ParseErrorKind::MissingSemicolon => write!(f, "missing terminating ';'"),
            ParseErrorKind::TrailingInput => write!(f, "trailing input after ';'"),
        }
    }
}

/// A Newick syntax or validation error, positioned at a byte offset.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn new(offset: usize, kind: ParseErrorKind) -> Self {
        ParseError { offset, kind }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error {0}")]
    Parse(#[from] ParseError),
    #[error("parse error on line {line} {source}")]
    ParseLine { line: usize, source: ParseError },
    #[error("invalid taxon name `{0}`")]
    InvalidTaxon(String),
    #[error("unknown taxon `{0}`")]
    UnknownTaxon(String),
    #[error("duplicate taxon `{0}`")]
    DuplicateTaxon(String),
    #[error("empty taxon set")]
    EmptyTaxa,
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("no such node {0}")]
    NoSuchNode(usize),
    #[error("no such edge: {0}")]
    NoSuchEdge(String),
    #[error("label sets differ: {0}")]
    LabelMismatch(String),
    #[error("need at least {needed} trees, got {got}")]
    TooFewTrees { needed: usize, got: usize },
    #[error("need at least {needed} leaves, got {got}")]
    TooFewLeaves { needed: usize, got: usize },
    #[error("not an agreement forest: {0}")]
    NotAgreementForest(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("instance too large for exact search: {n} taxa (limit {limit})")]
    TooLarge { n: usize, limit: usize },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}
