//! Error type shared by the solver, generator and harness.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A trial point lies outside the problem domain.
    #[error("point {point:?} violates the domain at coordinate {coord}: {value} not in [{lower}, {upper}]")]
    DomainViolation {
        point: Vec<f64>,
        coord: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    /// The evaluator returned a NaN or infinite value or gradient entry.
    #[error("non-finite evaluation at {point:?}: value {value}, gradient {gradient:?}")]
    NonFiniteEvaluation {
        point: Vec<f64>,
        value: f64,
        gradient: Vec<f64>,
    },

    /// Subdivision depth exceeded the exact-arithmetic cap.
    #[error("ternary subdivision depth exceeded the cap of {cap} splits")]
    DepthOverflow { cap: u32 },

    /// A stored vertex record disagrees with its key (internal corruption).
    #[error("vertex database corruption: record at {stored:?} does not match key point {expected:?}")]
    VertexCollision {
        expected: Vec<f64>,
        stored: Vec<f64>,
    },

    /// Two diagonal endpoints coincide.
    #[error("degenerate hyperinterval: diagonal endpoints coincide")]
    DegenerateInterval,

    /// An interval id not present in the partition was requested.
    #[error("unknown hyperinterval id {0}")]
    UnknownInterval(usize),

    /// Invalid problem or solver configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An internal contract was violated (indicates a bug, not bad input).
    #[error("internal contract violated: {0}")]
    Contract(String),

    /// Test-function generation could not place the required geometry.
    #[error("test-class generation failed for class {class} index {index}: {reason}")]
    Generation {
        class: String,
        index: usize,
        reason: String,
    },

    /// I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Annotates an I/O failure with the path involved.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
