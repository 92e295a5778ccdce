use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Angle or coordinate outside the domain where an operation is defined.
    #[error("outside domain: {0}")]
    Domain(String),

    #[error("grid error: {0}")]
    Grid(String),

    /// A Casimir eigenvalue that is not `j(j+1)` for a positive integer `j`.
    #[error("non-principal embedding: Casimir eigenvalue {0} is not j(j+1) for integer j >= 1")]
    NonPrincipal(f64),

    /// Structural failure of an assembled operator (complex or zero roots).
    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("input not invariant along axis {axis}: variation {variation:e}")]
    NotInvariant { axis: String, variation: f64 },

    #[error("integration blew up at y = {y}")]
    BlowUp {
        y: f64,
        partial: Box<crate::nahm::NahmTrajectory>,
    },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
