use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("binomial coefficient ({n} choose {k}) outside the precomputed table")]
    BinomialRange { n: usize, k: usize },

    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error("{what}: expected {expected} entries, found {found}")]
    StackSize {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("kinematics cache holds order {available}, order {requested} requested")]
    CacheOrder { available: usize, requested: usize },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("model file {path}: {message}")]
    Parse { path: String, message: String },

    #[error("degenerate joint inertia at body {body}: Sᵀ·Mᴬ·S = {value:e}")]
    DegenerateJoint { body: usize, value: f64 },

    #[error("articulated inertia of the base is singular")]
    SingularBase,

    #[error("invalid hybrid partition: {0}")]
    Partition(String),

    #[error("time {t} outside trajectory horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("table data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
