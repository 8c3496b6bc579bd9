use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Two bodies coincide, so forces and the self-potential are undefined.
    #[error("collision configuration: bodies {0} and {1} coincide")]
    CollisionConfiguration(usize, usize),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The step controller drove the step below machine-representable size.
    /// Signals an unregularized singularity on the integration path.
    #[error("step size underflow at s = {s}")]
    StepUnderflow { s: f64 },

    #[error("step limit exceeded at s = {s}")]
    StepLimit { s: f64 },

    #[error("no sign change brackets the requested event")]
    NoSignChange,

    #[error("state is off the prescribed energy level: |Gamma| = {residual:e}")]
    NotOnEnergyLevel { residual: f64 },

    #[error("energy must be negative for bounded motion, got {0}")]
    NonNegativeEnergy(f64),

    /// Both regularized channels fell below the guard threshold; the chart is
    /// not valid near a triple collision or total collapse.
    #[error("triple-collision guard tripped at s = {s}")]
    TripleCollisionChart { s: f64 },

    #[error("chart domain violation: {0}")]
    ChartDomain(String),

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("continuation stalled at parameter {parameter} (step {step:e})")]
    ContinuationStalled { parameter: f64, step: f64 },

    #[error("bracket endpoints share the same classification")]
    SameClassification,

    #[error("eigenvector basis is ill conditioned (estimate {0:e})")]
    IllConditionedSpectrum(f64),

    #[error("invalid input: {0}")]
    Invalid(String),
}
