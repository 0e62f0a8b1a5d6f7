use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid subshift: {0}")]
    InvalidSpec(String),
    #[error("subshift is not topologically mixing")]
    NotMixing,
    #[error("no admissible connecting word of length {gap} from {from} to {to}")]
    NoPath { from: usize, to: usize, gap: usize },
    #[error("invalid periodic point: {0}")]
    InvalidPeriodicPoint(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("the two periodic orbits share a window of radius {0}")]
    OrbitsOverlap(usize),
    #[error("window function has no value for window {0:?}")]
    MissingWindow(Vec<u16>),
    #[error("window radius {radius} too wide: {reason}")]
    WindowTooWide { radius: usize, reason: String },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("orbit escaped the domain at step {step} (x = {x})")]
    OrbitEscaped { step: usize, x: f64 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("range violation: {0}")]
    RangeViolation(String),
    #[error("degenerate scale range: {0}")]
    DegenerateRange(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// Whether the error stems from a computational budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded(_) | Error::Overflow(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
