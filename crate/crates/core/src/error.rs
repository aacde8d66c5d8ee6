use thiserror::Error;

/// Errors produced by model construction, synthesis and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("matrix is singular (pivot {pivot} below tolerance at column {col})")]
    Singular { col: usize, pivot: f64 },

    #[error("eigenvalue iteration failed to converge for {size}x{size} matrix (norm {norm:.3e})")]
    EigenNoConvergence { size: usize, norm: f64 },

    #[error("Schur reordering failed: {reason}")]
    ReorderFailed { reason: String },

    #[error("pair (A, B) is not stabilizable: uncontrollable mode at {mode} with Re >= 0")]
    NotStabilizable { mode: String },

    #[error("no stabilizing Riccati solution: {reason}")]
    NoStabilizingSolution { reason: String },

    #[error("Rosenbrock pencil is degenerate (output map identically zero)")]
    DegeneratePencil,

    #[error("state diverged during simulation; last finite sample index {last_finite}")]
    Divergence { last_finite: usize },

    #[error("road events are not aligned to the integration grid: {what} = {value} is not an integer multiple of dt = {dt}")]
    MisalignedEvent {
        what: &'static str,
        value: f64,
        dt: f64,
    },

    #[error("trajectory is empty or too short: {reason}")]
    EmptyTrajectory { reason: String },

    #[error("controller does not match requested variant: {reason}")]
    VariantMismatch { reason: String },

    #[error("scenario `{scenario}`, variant `{variant}`: {source}")]
    InScenario {
        scenario: String,
        variant: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
