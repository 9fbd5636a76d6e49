use crate::error::SimError;
use thiserror::Error;

/// Config-document diagnostics; every variant that stems from a specific
/// line carries its 1-based number.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },

    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },

    #[error("line {line}: bad unit `{unit}` for `{key}` (expects {dimension})")]
    BadUnit {
        line: usize,
        key: String,
        unit: String,
        dimension: &'static str,
    },

    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },

    #[error("line {line}: duplicate {what} `{name}`")]
    Duplicate { line: usize, what: &'static str, name: String },

    #[error("missing section [{section}]")]
    MissingSection { section: String },

    #[error("line {line}: [{section}] is missing required key `{key}`")]
    MissingKey { line: usize, section: String, key: String },

    #[error("line {line}: cannot read `{path}`: {message}")]
    File { line: usize, path: String, message: String },

    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: SimError,
    },
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Syntax { .. } => "syntax",
            ConfigError::UnknownSection { .. } => "unknown_section",
            ConfigError::UnknownKey { .. } => "unknown_key",
            ConfigError::BadUnit { .. } => "bad_unit",
            ConfigError::BadValue { .. } => "bad_value",
            ConfigError::Duplicate { .. } => "duplicate",
            ConfigError::MissingSection { .. } => "missing_section",
            ConfigError::MissingKey { .. } => "missing_key",
            ConfigError::File { .. } => "file",
            ConfigError::Invalid { .. } => "invalid",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::MissingSection { .. } => None,
            ConfigError::Syntax { line, .. }
            | ConfigError::UnknownSection { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::BadUnit { line, .. }
            | ConfigError::BadValue { line, .. }
            | ConfigError::Duplicate { line, .. }
            | ConfigError::MissingKey { line, .. }
            | ConfigError::File { line, .. }
            | ConfigError::Invalid { line, .. } => Some(*line),
        }
    }
}
