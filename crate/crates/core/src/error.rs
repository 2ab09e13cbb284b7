use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexError {
    #[error("bad hex: odd number of digits in {0:?}")]
    OddLength(String),
    #[error("bad hex: invalid digit in {0:?}")]
    InvalidDigit(String),
    #[error("bad hex: expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("bad hex: integer {0:?} exceeds 256 bits")]
    Overflow(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("payload/method mismatch: {method} cannot carry a {payload} payload")]
    PayloadMismatch {
        method: &'static str,
        payload: &'static str,
    },
    #[error("invalid context: {0}")]
    InvalidContext(&'static str),
}

/// Failures while turning a JSON-RPC signing request into a [`crate::SigningRequest`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unknown method: {0}")]
    UnknownMethod(String),
    #[error("malformed params at {path}: {message}")]
    MalformedParams { path: String, message: String },
    #[error("bad hex at {path}: {source}")]
    BadHex { path: String, source: HexError },
    #[error("invalid json: {0}")]
    Json(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ParseError {
    pub(crate) fn malformed(path: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError::MalformedParams {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable machine code used in error envelopes.
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::UnknownMethod(_) => "unknown_method",
            ParseError::MalformedParams { .. } => "malformed_params",
            ParseError::BadHex { .. } => "bad_hex",
            ParseError::Json(_) => "invalid_json",
            ParseError::Model(_) => "payload_method_mismatch",
        }
    }

    /// Location inside the request the error refers to, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            ParseError::MalformedParams { path, .. } | ParseError::BadHex { path, .. } => {
                Some(path)
            }
            ParseError::UnknownMethod(_) => Some("method"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbiError {
    #[error("non-canonical signature: {0:?}")]
    NonCanonicalSignature(String),
    #[error("unsupported abi type: {0}")]
    UnsupportedType(String),
    #[error("truncated calldata: {needed} bytes needed at offset {offset}, {available} available")]
    TruncatedCalldata {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("invalid abi value for {ty} at word {word}")]
    InvalidValue { ty: String, word: usize },
    #[error("calldata shorter than a selector ({0} bytes)")]
    ShortCalldata(usize),
    #[error("selector registry: {0}")]
    Registry(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypedDataError {
    #[error("cyclic types: {0}")]
    CyclicTypes(String),
    #[error("undefined type: {0}")]
    UndefinedType(String),
    #[error("invalid typed data: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpretError {
    #[error("missing actor: no signer address in request {0}")]
    MissingActor(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnowledgeBaseError {
    #[error("knowledge base json: {0}")]
    Json(String),
    #[error("knowledge base: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExplainError {
    #[error("unfillable slot {slot:?} in template for {intent}")]
    UnfillableSlot { intent: String, slot: String },
    #[error("template set: {0}")]
    Templates(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("corpus invalid: {}", .0.join("; "))]
    CorpusInvalid(Vec<String>),
    #[error("duplicate decision for session {session} task {task}")]
    DuplicateDecision { session: String, task: String },
    #[error("invalid rating: {field}={value} (expected 1..=5)")]
    InvalidRating { field: &'static str, value: u8 },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("empty log")]
    EmptyLog,
    #[error("log line {line}: {message}")]
    LogFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
