use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// The CLI maps these onto exit codes: configuration problems exit with 2,
/// budget and solver failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("joint action space needs {cells} payoff cells, budget is {budget}")]
    BudgetExceeded { cells: u128, budget: u128 },

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program solver failed: {0}")]
    Numerical(String),

    #[error("{0}")]
    Undefined(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user-supplied input rather than by the solvers.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_) | Error::InvalidArgument(_) | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
