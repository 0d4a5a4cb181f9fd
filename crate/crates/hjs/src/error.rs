use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: expected {expected} points, got {found}")]
    Shape { expected: usize, found: usize },
    #[error("grid too small: half width {half_width} < required {required}")]
    GridTooSmall { half_width: f64, required: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate state: field is identically zero")]
    DegenerateState,
    #[error("amplitude node at grid index {index}: phase undefined")]
    Node { index: usize },
    #[error("phase increment {increment:.3} rad between grid indices {index} and {} is under-resolved", index + 1)]
    PhaseResolution { index: usize, increment: f64 },
    #[error("numerical blow-up at step {step}: {reason}")]
    Blowup { step: usize, reason: String },
    #[error("non-finite value at step {step}, grid index {index}")]
    NonFinite { step: usize, index: usize },
    #[error("node formation at step {step}, grid index {index}: amplitude below regularization floor")]
    NodeFormation { step: usize, index: usize },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    /// True for failures of the integration itself (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Blowup { .. } | Error::NonFinite { .. } | Error::NodeFormation { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
