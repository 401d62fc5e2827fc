use crate::data::TraceRecord;

/// State captured when a run is aborted because the iterates blew up.
#[derive(Debug, Clone)]
pub struct Divergence {
    pub passes: f64,
    pub objective: f64,
    pub grad_norm_sq: f64,
    /// Trace recorded up to (and including) the offending checkpoint.
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error(
        "run diverged after {:.3} passes (objective {}, squared gradient norm {})",
        .0.passes, .0.objective, .0.grad_norm_sq
    )]
    Diverged(Box<Divergence>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
