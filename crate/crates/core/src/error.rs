use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subsystem dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("total dimension {total} exceeds the cap of {cap}")]
    DimensionCap { total: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operands live on different Hilbert spaces ({left:?} vs {right:?})")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("partial trace needs at least one subsystem to keep")]
    EmptyKeepSet,

    #[error("operator is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not unitary (max |U^dag U - 1| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid temperature {0}: use the explicit zero/infinite limits")]
    InvalidTemperature(f64),

    #[error("invalid density matrix: {what} = {value:e}")]
    InvalidState { what: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("resonance condition violated: residual {residual:e} exceeds {tolerance:e}")]
    Resonance { residual: f64, tolerance: f64 },

    #[error("gap ordering violated: {0}")]
    GapOrdering(String),

    #[error("generator null space is degenerate (dimension {dimension})")]
    DegenerateNullSpace { dimension: usize },

    #[error("steady-state solve did not converge: residual {residual:e}")]
    NonConvergence { residual: f64 },

    #[error("step size too coarse: {0}")]
    StepTooCoarse(String),

    #[error("integration failed at t = {time}: {source}")]
    EvolutionFailure { time: f64, source: Box<Error> },

    #[error("trajectory norm underflow at t = {time}")]
    NormUnderflow { time: f64 },

    #[error("no jump channel tagged `{0}`")]
    UnknownTag(String),

    #[error("insufficient events: {0}")]
    InsufficientEvents(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
