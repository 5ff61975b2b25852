use thiserror::Error;

/// Errors raised by the polarimetry toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("unphysical tensor: reconstructed state has eigenvalue {0:e}")]
    UnphysicalTensor(f64),

    #[error("unphysical Stokes vector: degree of polarization {0} exceeds 1")]
    UnphysicalStokes(f64),

    #[error("invalid Kraus ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("not completely positive: Pauli weight {index} is {weight:e}")]
    NotCompletelyPositive { index: usize, weight: f64 },

    #[error("channel annihilates state")]
    ChannelAnnihilatesState,

    #[error("an arm must be selected for a two-photon input")]
    ArmRequired,

    #[error("dephasing undefined for this input (zero HV/VH coherence)")]
    DephasingUndefined,

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("no transmission within acceptance")]
    NoTransmission,

    #[error("tomography design matrix is rank deficient (rank {0} < 16)")]
    RankDeficient(usize),

    #[error("all counts are zero")]
    ZeroCounts,

    #[error("underdetermined: stabilizer algebra has dimension {0}, see stabilizer report")]
    Underdetermined(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
