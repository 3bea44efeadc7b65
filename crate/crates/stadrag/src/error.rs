use stadrag_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl AppError {
    /// Process exit code: 2 for configuration problems, 3 for integrator
    /// failures, 4 for an unusable readout calibration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Core(CoreError::IntegratorFailure { .. }) => 3,
            AppError::Core(CoreError::InvalidCalibration { .. }) => 4,
            AppError::Core(_) => 2,
            AppError::Io(_) | AppError::Csv(_) => 1,
        }
    }
}
