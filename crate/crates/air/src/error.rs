//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by feature handling, stream building, training and I/O.
#[derive(Debug, Error)]
pub enum AirError {
    /// A vector or matrix had a different dimension than the operation requires.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// An input contained NaN or infinite values.
    #[error("non-finite value rejected in {0}")]
    NonFinite(&'static str),

    /// A parameter violated its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A class did not have enough samples to satisfy the requested counts.
    #[error("class {class}: {available} samples available, {needed} required")]
    InsufficientSamples {
        class: u32,
        needed: usize,
        available: usize,
    },

    /// A label was observed again after its phase was folded away.
    /// The folded accumulators assume phase-disjoint classes; streams where
    /// classes reappear must use GCIL mode.
    #[error("class {label} reappeared after being folded; use GCIL mode for streams where classes recur")]
    ClassReappeared { label: u32 },

    /// The operation is only defined for the other training mode.
    #[error("{op} requires {required} mode")]
    WrongMode {
        op: &'static str,
        required: &'static str,
    },

    /// Cholesky factorization failed even after diagonal jitter.
    #[error("factorization of the regularized Gram matrix failed")]
    FactorizationFailed,

    /// A feature or weight file did not start with the expected magic bytes.
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    /// A feature or weight file declared an unsupported format version.
    #[error("unsupported format version {found} (supported: {supported})")]
    BadVersion { found: u32, supported: u32 },

    /// A file ended before the declared payload was complete.
    #[error("truncated file while reading {0}")]
    Truncated(&'static str),

    /// A file declared (or a writer was given) a zero feature dimension.
    #[error("feature dimension must be positive")]
    ZeroDimension,

    /// An error that occurred while processing a specific stream phase.
    #[error("phase {phase}: {source}")]
    InPhase {
        phase: usize,
        #[source]
        source: Box<AirError>,
    },

    /// The run configuration failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("report error: {0}")]
    Json(#[from] serde_json::Error),
}

impl AirError {
    /// Process exit code used by the command-line front end:
    /// 2 config error, 3 scenario/guard violation, 4 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            AirError::InPhase { source, .. } => source.exit_code(),
            AirError::Config(_) | AirError::InvalidParameter(_) => 2,
            AirError::Io(_)
            | AirError::Json(_)
            | AirError::BadMagic { .. }
            | AirError::BadVersion { .. }
            | AirError::Truncated(_)
            | AirError::ZeroDimension => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, AirError>;
