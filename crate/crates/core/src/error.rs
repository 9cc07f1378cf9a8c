use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("empty token")]
    Empty,
    #[error("token {0:?} contains whitespace")]
    ContainsWhitespace(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConllError {
    #[error("line {line}: expected at least a token and a tag, got {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: malformed tag {tag:?}")]
    MalformedTag { line: usize, tag: String },
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("origin index {next} does not follow {previous}")]
    OriginOrder { previous: usize, next: usize },
    #[error(transparent)]
    Token(#[from] TokenError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpanError {
    #[error("tag sequence is not valid IOB2 ({violations} violation(s), first at token {first})")]
    InvalidScheme { violations: usize, first: usize },
    #[error("span {start}..{end} overlaps a previous span")]
    OverlappingSpans { start: usize, end: usize },
    #[error("span {start}..{end} is outside a sentence of length {length}")]
    SpanOutOfRange { start: usize, end: usize, length: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("source text already contains a placeholder-like pattern {0:?}")]
    PatternCollision(String),
    #[error(transparent)]
    Span(#[from] SpanError),
    #[error("placeholder index {index} has no entity ({entities} entities)")]
    UnknownIndex { index: usize, entities: usize },
    #[error("placeholder index {0} appears more than once")]
    DuplicateIndex(usize),
    #[error("placeholder index {0} is missing from the translated text")]
    MissingIndex(usize),
    #[error("entity {0} translated to an empty string")]
    EmptyEntityTranslation(usize),
    #[error("{entities} entity translations but {labels} labels")]
    LabelCountMismatch { entities: usize, labels: usize },
    #[error(transparent)]
    Sentence(#[from] ConllError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("translation backend unavailable: {0}")]
    Unavailable(String),
    #[error("translation backend protocol error: {0}")]
    Protocol(String),
    #[error("invalid translation request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("cache file {path} is in use by another run")]
    Locked { path: String },
    #[error("cache I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("dictionary line {line}: expected \"source<TAB>target\"")]
    MalformedLine { line: usize },
    #[error("dictionary I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("run aborted on backend failure (sentence {origin_index}): {source}")]
    AbortedRun {
        origin_index: usize,
        #[source]
        source: BackendError,
    },
}
