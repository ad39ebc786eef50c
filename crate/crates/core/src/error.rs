use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lexicon category problem: {0}")]
    MissingCategory(String),
    #[error("duplicate lexeme `{lexeme}` in category {category}")]
    DuplicateLexeme { category: String, lexeme: String },
    #[error("lexeme `{lexeme}` in category {category} is changed by the tokenizer")]
    NonCanonicalLexeme { category: String, lexeme: String },

    #[error("{source_name}:{line}: malformed record: {message}")]
    MalformedRecord {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("utterance `{utterance}` replies to unknown utterance `{reply_to}`")]
    DanglingReply { utterance: String, reply_to: String },

    #[error("unknown group scheme `{0}`")]
    UnknownScheme(String),
    #[error("insufficient metadata: {0}")]
    InsufficientMetadata(String),
    #[error("participant `{0}` matches more than one group of the scheme")]
    AmbiguousMembership(String),

    #[error("no speaker has a defined value: {0}")]
    EmptyGroup(String),
    #[error("no group mean available to smooth marker {0}")]
    MissingGroupMean(String),

    #[error("sample too small: need at least 2 values, got {0}")]
    TooFewSamples(usize),
    #[error("both samples have zero variance")]
    DegenerateSample,

    #[error("no conversing pairs found: {0}")]
    NoPairs(String),
    #[error("coordination undefined for pair ({0}, {1})")]
    UndefinedCoordination(String, String),
    #[error("training data contains a single class")]
    SingleClassDataset,
    #[error("dataset problem: {0}")]
    InvalidDataset(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingCategory(_) => "MissingCategory",
            Error::DuplicateLexeme { .. } => "DuplicateLexeme",
            Error::NonCanonicalLexeme { .. } => "NonCanonicalLexeme",
            Error::MalformedRecord { .. } => "MalformedRecord",
            Error::DuplicateId(_) => "DuplicateId",
            Error::DanglingReply { .. } => "DanglingReply",
            Error::UnknownScheme(_) => "UnknownScheme",
            Error::InsufficientMetadata(_) => "InsufficientMetadata",
            Error::AmbiguousMembership(_) => "AmbiguousMembership",
            Error::EmptyGroup(_) => "EmptyGroup",
            Error::MissingGroupMean(_) => "MissingGroupMean",
            Error::TooFewSamples(_) => "TooFewSamples",
            Error::DegenerateSample => "DegenerateSample",
            Error::NoPairs(_) => "NoPairs",
            Error::UndefinedCoordination(..) => "UndefinedCoordination",
            Error::SingleClassDataset => "SingleClassDataset",
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::Io { .. } => "Io",
            Error::Json(_) => "Json",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
