use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid source distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid optical configuration: {0}")]
    InvalidOptics(String),

    /// The chain rule through σ = √θ₂ breaks down at zero roughness.
    #[error("singular parametrization: {0}")]
    SingularParametrization(String),

    #[error("parameter not identifiable: {0}")]
    Unidentifiable(String),

    /// Failure raised while forming an estimate inside a simulation run.
    #[error("estimator failure: {0}")]
    Estimator(Box<Error>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
