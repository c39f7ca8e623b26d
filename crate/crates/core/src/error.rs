use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid rotation plane: axes {i} and {j} in dimension {dim}")]
    InvalidPlane { i: usize, j: usize, dim: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("point {index} has no positive (same-class) partner in the batch")]
    NoPositive { index: usize },

    #[error("point {index} has no negative (other-class) partner in the batch")]
    NoNegative { index: usize },

    #[error("augmentation map is incomplete: {0}")]
    IncompleteAugmentation(String),

    #[error("configuration is not class-balanced: {0}")]
    Unbalanced(String),

    #[error("alpha = {alpha} is at or below the spread window (2/3)")]
    BelowWindow { alpha: f64 },

    #[error("alpha = {alpha} is above the spread window for tau = {tau}")]
    AboveWindow { alpha: f64, tau: f64 },

    #[error("alpha window undefined for tau = {tau}: negative radicand {radicand}")]
    WindowUndefined { tau: f64, radicand: f64 },

    #[error("numerical failure in restart with seed {seed} at iteration {iteration}: {detail}")]
    NumericalFailure {
        seed: u64,
        iteration: usize,
        detail: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("subclass mismatch: {0}")]
    Mismatch(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    TrainingFailure { epoch: usize, detail: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid_dimension",
            Error::InvalidPlane { .. } => "invalid_plane",
            Error::Domain(_) => "domain",
            Error::Label(_) => "label",
            Error::NoPositive { .. } => "no_positive",
            Error::NoNegative { .. } => "no_negative",
            Error::IncompleteAugmentation(_) => "incomplete_augmentation",
            Error::Unbalanced(_) => "unbalanced",
            Error::BelowWindow { .. } => "below_window",
            Error::AboveWindow { .. } => "above_window",
            Error::WindowUndefined { .. } => "window_undefined",
            Error::NumericalFailure { .. } => "numerical_failure",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Mismatch(_) => "mismatch",
            Error::DegenerateSample(_) => "degenerate_sample",
            Error::TrainingFailure { .. } => "training_failure",
            Error::Shape(_) => "shape",
            Error::Parse { .. } => "parse",
        }
    }
}
