use thiserror::Error;

/// Failures surfaced by the command line, each with a fixed exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, or a configuration that fails validation.
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Singular(String),

    #[error("{0}")]
    Estimator(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Singular(_) => 2,
            CliError::Estimator(_) => 3,
        }
    }
}

impl From<roughness::Error> for CliError {
    fn from(e: roughness::Error) -> Self {
        use roughness::Error as E;
        match e {
            E::SingularParametrization(_) | E::Unidentifiable(_) => CliError::Singular(e.to_string()),
            E::Estimator(_) => CliError::Estimator(e.to_string()),
            E::InvalidArgument(_) | E::InvalidDistribution(_) | E::InvalidOptics(_) => {
                CliError::Validation(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
