use thiserror::Error;

/// Errors raised by the analytics, the simulation and the experiment harness.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("netcore: self-loan rejected (bank {0} cannot owe itself)")]
    SelfLoan(usize),

    #[error("netcore: bank index {index} out of range for {banks} banks")]
    BankOutOfRange { index: usize, banks: usize },

    #[error("netcore: invalid amount {0} (must be finite and non-negative)")]
    InvalidAmount(f64),

    #[error("debtrank: distressed set must not be empty")]
    EmptyDistressSet,

    #[error("debtrank: vector length {got} does not match {expected} banks")]
    LengthMismatch { expected: usize, got: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("abm: invariant violated at step {step}: {detail}")]
    Invariant { step: usize, detail: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
