use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing or out of range. `field` names the
    /// offending key.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("round {round} lies beyond the last epoch boundary {last}")]
    ScheduleExhausted { round: u64, last: u64 },

    #[error("policy space too large to enumerate: {contexts} contexts x {actions} actions")]
    PolicySpaceTooLarge { contexts: usize, actions: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("failed to parse config: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
