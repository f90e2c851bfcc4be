use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A frequency or index does not fit the declared prime basis, or two
    /// objects disagree on dimension.
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("integer overflow computing frequency for multi-index {0:?}")]
    Overflow(Vec<u32>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// The Kronecker scan ran out of steps. Existence of a solution is not in
    /// question; the caller may retry with a larger budget.
    #[error("solver budget of {budget} steps exhausted; best residuals seen {best_residuals:?}")]
    Budget {
        budget: u64,
        best_residuals: Vec<f64>,
    },

    #[error("construction failed at level {level}, source {source_index}, repetition {repetition}: {reason}")]
    Construction {
        level: u32,
        source_index: usize,
        repetition: u64,
        reason: String,
    },

    #[error("capacity error: construction needs {needed} atoms, cap is {cap}")]
    Capacity { needed: u128, cap: u64 },

    #[error("representation error: {0}")]
    Representation(String),

    #[error("empty measure on [0, {0}]")]
    EmptyMeasure(f64),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
