use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its domain (negative pitch, α > 1, ...).
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not symmetric: H[{row}][{col}] = {upper} but H[{col}][{row}] = {lower}")]
    Asymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("site index {index} out of range 1..={len}")]
    SiteOutOfRange { index: usize, len: usize },

    /// No interior local maximum in the search window; the peak lies on an edge.
    #[error("peak at window boundary: no interior maximum in [{lo}, {hi}] mm")]
    PeakAtBoundary { lo: f64, hi: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient coincidences: n12 = {n12}, n13 = {n13} over {n_gates} gates")]
    InsufficientCoincidences { n12: u64, n13: u64, n_gates: u64 },

    #[error("insufficient singles: n1 = {n1}, n2 + n3 = {n23_sum} over {n_gates} gates")]
    InsufficientSingles { n1: u64, n23_sum: u64, n_gates: u64 },

    #[error("empty detection record stream")]
    EmptyRecords,

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than the runtime
    /// environment. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Asymmetric { .. }
                | Error::DimensionMismatch { .. }
                | Error::SiteOutOfRange { .. }
                | Error::Config { .. }
                | Error::Parse { .. }
        )
    }
}
