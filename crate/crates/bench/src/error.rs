#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] svrg_core::Error),

    #[error("every tuning cell diverged")]
    AllDiverged,

    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl BenchError {
    /// Process exit code: 1 config/IO, 2 divergence, 3 all-diverged grid, 4 failed verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Core(svrg_core::Error::Diverged(_)) => 2,
            BenchError::Config(_) | BenchError::Core(_) => 1,
            BenchError::AllDiverged => 3,
            BenchError::VerifyFailed(_) => 4,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Core(svrg_core::Error::Io(e))
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> BenchResult<T> {
    Err(BenchError::Config(msg.into()))
}
