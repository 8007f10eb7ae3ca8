//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing sensor channel {id}: only {available} sensor channels supplied")]
    MissingSensor { id: u16, available: usize },

    #[error("residual vector is empty")]
    EmptyResiduals,

    #[error("insufficient data: {rows} valid rows for {cols} design columns")]
    InsufficientData { rows: usize, cols: usize },

    #[error("degenerate design: collinear columns [{}]", columns.join(", "))]
    DegenerateData { columns: Vec<String> },

    #[error("unstable integration: sample dt {dt} s must be below min tau {tau_min} s / 2")]
    UnstableIntegration { dt: f64, tau_min: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("channels share no overlapping time window")]
    EmptyOverlap,

    #[error("dataset has no valid samples")]
    AllInvalid,

    #[error("non-monotonic timestamps at row {row}")]
    NonMonotonicTime { row: usize },

    #[error("unknown column or unit `{0}`")]
    UnknownColumn(String),

    #[error("duplicate sensor id {0}")]
    DuplicateSensor(u16),

    #[error("dataset {tag} was part of the training set")]
    Leakage { tag: String },

    #[error(
        "corrected setpoint {corrected} mm is outside stroke [0, {stroke}] mm; \
         uncorrected setpoint {uncorrected} mm was not applied"
    )]
    OutOfStroke {
        corrected: f64,
        uncorrected: f64,
        stroke: f64,
    },

    #[error("setpoint correction did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("no non-degenerate cells: Pareto front is empty")]
    EmptyFront,

    #[error("csv error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
