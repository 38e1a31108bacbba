use thiserror::Error;

/// Errors raised while loading graphs, mutating plans, scoring elections or
/// running trajectories.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("ward ids must be dense 0..{expected}, found id {found} at row {row}")]
    NonDenseWardId { expected: usize, found: usize, row: usize },

    #[error("edge references unknown ward {0}")]
    UnknownWard(usize),

    #[error("district {0} is out of range")]
    UnknownDistrict(usize),

    #[error("duplicate edge between wards {0} and {1}")]
    DuplicateEdge(usize, usize),

    #[error("self-loop edge on ward {0}")]
    SelfLoop(usize),

    #[error("ward {ward}: {field} must be {requirement}, got {value}")]
    InvalidAttribute {
        ward: usize,
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("edge ({0}, {1}) has nonpositive shared length {2}")]
    NonpositiveSharedLength(usize, usize, f64),

    #[error("district {0} is not contiguous")]
    DisconnectedDistrict(usize),

    #[error("district {0} has no wards")]
    EmptyDistrict(usize),

    #[error("assignment has {found} entries but the graph has {expected} wards")]
    AssignmentLength { expected: usize, found: usize },

    #[error("flip of ward {ward} would empty district {district}")]
    WouldEmptyDistrict { ward: usize, district: usize },

    #[error("ward {ward} is already in district {district}")]
    NoOpFlip { ward: usize, district: usize },

    #[error("stale flip delta: delta was taken at step {delta_step}, plan is at step {plan_step}")]
    StaleDelta { delta_step: u64, plan_step: u64 },

    #[error("district {0} has zero total votes")]
    ZeroVoteDistrict(usize),

    #[error("non-finite label {0}")]
    NonFiniteLabel(f64),

    #[error("epsilon {0} is outside (0, 1]")]
    EpsilonOutOfRange(f64),

    #[error("accumulator observed no states")]
    EmptyAccumulator,

    #[error("seed plan is invalid: {0}")]
    InvalidSeedPlan(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration exceeded {0} explored assignments")]
    EnumerationGuard(u64),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("conservation violated: {0}")]
    Conservation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
