use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate simplex {0:?}")]
    DuplicateSimplex(Vec<usize>),
    #[error("triangle {triangle:?} references missing edge {edge:?}")]
    MissingFace { triangle: [usize; 3], edge: [usize; 2] },
    #[error("vertex index {index} out of range for {num_vertices} vertices")]
    IndexOutOfRange { index: usize, num_vertices: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },
    #[error("forward tape does not match parameters: {0}")]
    TapeMismatch(String),
    #[error("non-finite augmentation objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("degenerate (zero-norm) vector")]
    DegenerateVector,
    #[error("degenerate {component} component with positive weight")]
    DegenerateComponent { component: &'static str },
    #[error("all similarity scores are zero")]
    AllZeroScores,
    #[error("anchor {anchor} has no negatives")]
    EmptyNegatives { anchor: usize },
    #[error("weight dimension mismatch: {0}")]
    WeightDimensionMismatch(String),
    #[error("batch of {0} anchors is too small (need at least 2)")]
    BatchTooSmall(usize),
    #[error("invalid hole placement: {0}")]
    InvalidHolePlacement(String),
    #[error("no path between vertices {from} and {to}")]
    NoPath { from: usize, to: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown label {0}")]
    UnknownLabel(i64),
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("split leak: expected {expected} data, found {found}")]
    SplitLeak {
        expected: &'static str,
        found: &'static str,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DuplicateSimplex(_) => "DuplicateSimplex",
            Error::MissingFace { .. } => "MissingFace",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::NonFiniteActivation { .. } => "NonFiniteActivation",
            Error::TapeMismatch(_) => "TapeMismatch",
            Error::NonFiniteObjective { .. } => "NonFiniteObjective",
            Error::DegenerateVector => "DegenerateVector",
            Error::DegenerateComponent { .. } => "DegenerateComponent",
            Error::AllZeroScores => "AllZeroScores",
            Error::EmptyNegatives { .. } => "EmptyNegatives",
            Error::WeightDimensionMismatch(_) => "WeightDimensionMismatch",
            Error::BatchTooSmall(_) => "BatchTooSmall",
            Error::InvalidHolePlacement(_) => "InvalidHolePlacement",
            Error::NoPath { .. } => "NoPath",
            Error::Parse { .. } => "ParseError",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::SingleClassInput => "SingleClassInput",
            Error::InsufficientData(_) => "InsufficientData",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::SplitLeak { .. } => "SplitLeak",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_mismatch(what: impl Into<String>) -> Error {
    Error::DimensionMismatch(what.into())
}
