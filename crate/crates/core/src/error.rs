use thiserror::Error;

/// Errors raised by the simulation engines and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step size too large: dt·{rate_name} = {product:.3e} exceeds {limit}")]
    StepTooLarge {
        rate_name: String,
        product: f64,
        limit: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("noise trace covers {covered:.3e} s but {required:.3e} s were requested")]
    TraceTooShort { covered: f64, required: f64 },

    #[error("level index {index} is not part of a {levels}-level graph")]
    UnknownLevel { index: usize, levels: usize },

    #[error("quadrature did not converge: estimated error {error:.3e} after {intervals} intervals")]
    Quadrature { error: f64, intervals: usize },

    #[error("{model} noise is not supported by {operation}")]
    UnsupportedNoise {
        model: &'static str,
        operation: &'static str,
    },

    #[error("segment {index}: {source}")]
    Segment {
        index: usize,
        #[source]
        source: Box<SimError>,
    },

    #[error("invalid pulse sequence: {0}")]
    Sequence(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed spectrum file {path}, line {line}: {message}")]
    SpectrumFile {
        path: String,
        line: usize,
        message: String,
    },
}

impl SimError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        SimError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_segment(self, index: usize) -> Self {
        SimError::Segment {
            index,
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::InvalidParameter { .. } => "invalid_parameter",
            SimError::StepTooLarge { .. } => "step_too_large",
            SimError::DimensionMismatch { .. } => "dimension_mismatch",
            SimError::TraceTooShort { .. } => "trace_too_short",
            SimError::UnknownLevel { .. } => "unknown_level",
            SimError::Quadrature { .. } => "quadrature",
            SimError::UnsupportedNoise { .. } => "unsupported_noise",
            SimError::Segment { .. } => "segment",
            SimError::Sequence(_) => "sequence",
            SimError::EmptyInput(_) => "empty_input",
            SimError::Io { .. } => "io",
            SimError::SpectrumFile { .. } => "spectrum_file",
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
