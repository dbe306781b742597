use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration {0}")]
    Config(String),

    #[error(transparent)]
    Simulation(#[from] rfs_core::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("calibration failed: best P_{atoms}(1) = {best:.3} is not within {tolerance} of the target {target}")]
    CalibrationFailed {
        atoms: usize,
        best: f64,
        target: f64,
        tolerance: f64,
    },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(e) => match e {
                rfs_core::Error::Propagation { .. } | rfs_core::Error::Trajectory { .. } => 3,
                _ => 2,
            },
            CliError::Output { .. } => 1,
            CliError::CalibrationFailed { .. } => 4,
        }
    }
}
