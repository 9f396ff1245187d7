use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step law violates assumption `{assumption}`: {detail}")]
    Assumption { assumption: &'static str, detail: String },

    #[error("{what}: quadrature did not converge (achieved {achieved:.3e}, target {target:.3e})")]
    Quadrature { what: String, achieved: f64, target: f64 },

    #[error("{what} table too short: need index {needed}, have {have}")]
    TableTooShort { what: &'static str, needed: usize, have: usize },

    #[error("memory budget exceeded: {needed} bytes requested, budget {budget}")]
    MemoryBudget { needed: usize, budget: usize },

    #[error("unattainable: {0}")]
    Unattainable(String),

    #[error("{0}")]
    Domain(String),

    #[error("ill-conditioned fit (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("weight overflow at sample {sample}: log-weight {log_weight}")]
    WeightOverflow { sample: usize, log_weight: f64 },

    #[error("cache format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
