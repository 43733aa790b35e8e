use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad user configuration: unknown preset, malformed file, invalid parameters.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("state space of {states} states exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input outside the domain of an operation (boundary strategies, games
    /// violating the interior-equilibrium assumption, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::StateSpaceTooLarge { .. }
            | Error::Dimension(_)
            | Error::InvalidInput(_) => 1,
            Error::Numerical(_) => 2,
            Error::Io(_) => 3,
        }
    }
}
