use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("negative off-diagonal rate at ({row}, {col})")]
    NegativeOffDiagonal { row: usize, col: usize },
    #[error("row {row} violates the row-sum constraint (sum = {sum})")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("subsystem is empty")]
    EmptySubsystem,
    #[error("subsystem state {state} is out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("evidence has zero probability{}{}", record.map(|r| format!(" (record {r})")).unwrap_or_default(), segment.map(|s| format!(" at segment {s}")).unwrap_or_default())]
    ZeroProbabilityEvidence {
        record: Option<usize>,
        segment: Option<usize>,
    },
    #[error("adaptive integrator step underflow (step {step:e} on interval {interval:e})")]
    StepUnderflow { step: f64, interval: f64 },
    #[error("joint state space has {size} states, above the cap of {cap}")]
    JointSpaceTooLarge { size: usize, cap: usize },
    #[error("statistics put mass on a zero-rate transition of variable {variable} (instantiation {instantiation}, state {state})")]
    IncompatibleSupport {
        variable: usize,
        instantiation: usize,
        state: usize,
    },
    #[error("transient matrix is singular; absorption is unreachable from some phase")]
    SingularTransientMatrix,
    #[error("variable {variable}: phase counts differ across parent instantiations while phases persist over parent changes")]
    InconsistentPhaseCounts { variable: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported file format version {0}")]
    UnsupportedVersion(u32),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
