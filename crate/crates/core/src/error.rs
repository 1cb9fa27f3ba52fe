use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no quotes")]
    NoQuotes,
    #[error("invalid quote from client {client_id}: bid={bid}, quality={quality}")]
    InvalidQuote { client_id: u32, bid: f64, quality: f64 },
    #[error("count out of range: n={n} with {quotes} quotes")]
    CountOutOfRange { n: usize, quotes: usize },

    #[error("round already recorded: {0}")]
    RoundAlreadyRecorded(u32),
    #[error("arm {arm} out of range [1, {max}]")]
    ArmOutOfRange { arm: u32, max: u32 },
    #[error("accuracy delta {0} outside [-1, 1]")]
    DeltaOutOfRange(f64),
    #[error("degenerate nodes: index {0} repeated")]
    DegenerateNodes(u32),
    #[error("no observations for arm {0}")]
    NoObservations(u32),

    #[error("singular kernel matrix")]
    SingularKernel,
    #[error("observation values: expected {expected}, got {got}")]
    ValueCountMismatch { expected: usize, got: usize },

    #[error("unknown policy kind: {0}")]
    UnknownKind(String),
    #[error("{0} has no fixed per-round budget schedule")]
    NoSchedule(String),
    #[error("total budget exceeded: spent {spent} + {spend} > {total}")]
    BudgetExceeded { spent: f64, spend: f64, total: f64 },

    #[error("trace incomplete: missing round {round}, arm {arm}")]
    TraceIncomplete { round: u32, arm: u32 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty seed list")]
    NoSeeds,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
