use thiserror::Error;

pub type Result<T> = std::result::Result<T, PhysimError>;

/// Clause of a relation-preservation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationClause {
    /// primed_i = S ops_i S†
    Conjugation,
    /// sorted spectra agree
    Spectrum,
    /// [primed_i, primed_j] = S [ops_i, ops_j] S†
    Commutators,
    /// H(primed) = S H(ops) S†
    Functional,
}

impl std::fmt::Display for RelationClause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RelationClause::Conjugation => "(i) conjugation",
            RelationClause::Spectrum => "(ii) spectrum",
            RelationClause::Commutators => "(iii) commutators",
            RelationClause::Functional => "(iv) hamiltonian functional",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum PhysimError {
    #[error("state vector is zero")]
    ZeroState,
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("operator is not hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("spectrum error: {0}")]
    Spectrum(String),
    #[error("macroscopic operators do not commute (commutator norm {norm:.3e} between #{first} and #{second})")]
    NotCommuting { first: usize, second: usize, norm: f64 },
    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },
    #[error("relation violated: clause {clause} (deviation {deviation:.3e})")]
    RelationViolation { clause: RelationClause, deviation: f64 },
    #[error("state overlaps a protected sector (overlap {overlap:.3e})")]
    ProtectedSectorViolation { overlap: f64 },
    #[error("no assignment unitary commutes with the hamiltonian (commutator norm {norm:.3e})")]
    StrictModeUnsatisfiable { norm: f64 },
    #[error("invalid macrostate decomposition: {0}")]
    Decomposition(String),
    #[error("outcome-sequence enumeration exceeds cap of {cap}")]
    EnumerationCap { cap: usize },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no unphysicated sector left for event {event} at t = {time}")]
    UnphysicatedSectorExhausted { event: usize, time: f64 },
    #[error("event time {next} does not follow current time {current}")]
    EventOrder { current: f64, next: f64 },
    #[error("outcome {label} has zero weight and cannot be chosen")]
    ZeroWeightOutcome { label: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PhysimError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        PhysimError::Dimension(msg.into())
    }
}
