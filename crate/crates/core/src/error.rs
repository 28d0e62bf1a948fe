use thiserror::Error;

/// Errors raised while parsing or validating words, alphabets and languages.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InputError {
    #[error("symbol '{0}' is not in the alphabet")]
    UnknownSymbol(char),
    #[error("letter index {0} is outside the alphabet")]
    UnknownLetterIndex(usize),
    #[error("duplicate letter '{0}' in alphabet")]
    DuplicateLetter(char),
    #[error("letter '{0}' is reserved for end-markers")]
    ReservedLetter(char),
    #[error("alphabet entry {0:?} is not a single character")]
    NotSingleChar(String),
    #[error("alphabet has {size} letters, limit is {limit}")]
    AlphabetTooLarge { size: usize, limit: usize },
    #[error("word \"{0}\" repeats a letter")]
    RepeatedLetter(String),
    #[error("accept list contains \"{0}\" twice")]
    DuplicateAcceptEntry(String),
    #[error("parameter {0} must be positive")]
    ZeroParameter(&'static str),
    #[error("band word must be non-empty")]
    EmptyBandWord,
    #[error("malformed rational \"{0}\"")]
    BadRational(String),
    #[error("unknown variable name \"{0}\"")]
    BadVariable(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for InputError {
    fn from(e: serde_json::Error) -> Self {
        InputError::Json(e.to_string())
    }
}
