use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("DIMACS parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("clause {clause} is tautological (contains x{var} and its negation)")]
    Tautology { clause: usize, var: usize },

    #[error("literal {lit} references a variable outside 1..={n}")]
    LiteralOutOfRange { lit: i64, n: usize },

    #[error("declared {declared} clauses but found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },

    #[error("clause {clause} has width {width}, exceeding declared k={k}")]
    ClauseTooWide { clause: usize, width: usize, k: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{what}: n={n} exceeds cap {cap}")]
    CapExceeded { what: &'static str, n: usize, cap: usize },

    #[error("formula is unsatisfiable")]
    Unsatisfiable,

    #[error("rotation angle {0} outside (0, pi/2]")]
    InvalidAngle(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("measurement branch has probability {0:e}, cannot post-select")]
    ZeroProbabilityBranch(f64),

    #[error("state preparation exhausted {restarts} restarts after {measurements} measurements")]
    RestartsExhausted { restarts: u64, measurements: u64 },

    #[error("generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
