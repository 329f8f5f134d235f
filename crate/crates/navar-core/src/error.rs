//! Error type shared by all core modules.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by tensor ops, training, and scoring.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    /// Backward was requested from a node that is not a scalar.
    NonScalarRoot { shape: Vec<usize> },
    /// Backward was called twice on the same graph without rebuilding it.
    BackwardAlreadyRun,
    /// Invalid configuration value (sizes, learning rate, fractions, ...).
    Config(String),
    /// A replicate is too short for the requested lag depth.
    DatasetTooShort { t: usize, k: usize },
    /// A variable has zero variance on the normalization fit range.
    ConstantVariable { index: usize, name: String },
    /// Training loss became non-finite or exceeded the divergence bound.
    Divergence { epoch: usize, loss: f64 },
    /// Inputs to an operation disagree on variable count or sample count.
    DimensionMismatch(String),
    /// AUROC is undefined: labels are all positive or all negative.
    UndefinedAuroc { positives: usize, negatives: usize },
    /// A contribution series has fewer than two time steps.
    TooFewSteps { steps: usize },
    /// The requested analysis does not apply to this backbone kind.
    UnsupportedAnalysis(String),
    /// A synthetic generator failed to produce usable coefficients.
    GenerationFailure(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, lhs, rhs } => {
                write!(f, "{op}: shape mismatch between {lhs:?} and {rhs:?}")
            }
            Error::NonScalarRoot { shape } => {
                write!(f, "backward root must be a scalar, got shape {shape:?}")
            }
            Error::BackwardAlreadyRun => {
                write!(f, "backward already ran on this graph; rebuild it before calling again")
            }
            Error::Config(msg) => write!(f, "invalid config: {msg}"),
            Error::DatasetTooShort { t, k } => {
                write!(f, "replicate has {t} steps but lag depth {k} requires at least {}", k + 1)
            }
            Error::ConstantVariable { index, name } => {
                write!(f, "variable {name} (index {index}) has zero variance on the fit range")
            }
            Error::Divergence { epoch, loss } => {
                write!(f, "training diverged at epoch {epoch} (loss {loss})")
            }
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::UndefinedAuroc { positives, negatives } => write!(
                f,
                "AUROC undefined: {positives} positive and {negatives} negative labels"
            ),
            Error::TooFewSteps { steps } => {
                write!(f, "need at least 2 contribution steps, got {steps}")
            }
            Error::UnsupportedAnalysis(msg) => write!(f, "unsupported analysis: {msg}"),
            Error::GenerationFailure(msg) => write!(f, "generation failed: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
