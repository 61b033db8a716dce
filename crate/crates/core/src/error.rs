use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("spike index {index} out of range for a train of {len} spikes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Rejection sampling of admissible dipole pairs exhausted its attempt budget.
    #[error("sampling domain too small: no admissible dipole pair after {attempts} attempts")]
    DomainTooSmall { attempts: usize },

    /// Ground-truth generation could not place all spikes at the requested separation.
    #[error("cannot pack {k} spikes at separation {epsilon} after {attempts} rejections")]
    PackingInfeasible {
        k: usize,
        epsilon: f64,
        attempts: usize,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
