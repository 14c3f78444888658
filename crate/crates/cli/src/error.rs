use empowerment::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 success, 2 config error, 3 infeasible size, 4 numeric failure,
    /// 1 anything else (I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                CoreError::InvalidSpec(_)
                | CoreError::InvalidState(_)
                | CoreError::InvalidArgument(_)
                | CoreError::DimensionMismatch(_)
                | CoreError::NonDeterministic
                | CoreError::SequenceLength { .. }
                | CoreError::EmptyBatch
                | CoreError::Config(_)
                | CoreError::Snapshot(_) => 2,
                CoreError::EnumerationInfeasible { .. }
                | CoreError::CapExceeded { .. }
                | CoreError::RenderTooSmall { .. } => 3,
                CoreError::Numeric(_) | CoreError::NotNormalized(_) => 4,
                CoreError::Io(_) | CoreError::Csv(_) | CoreError::Json(_) => 1,
            },
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}
