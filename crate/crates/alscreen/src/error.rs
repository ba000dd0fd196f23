use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration file or config struct failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// An operation was called with inputs that violate its preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Training set contains fewer than two distinct target classes.
    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),

    /// Feature vector does not match the schema a model was trained with.
    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A statistic is undefined for the given input (e.g. no positives).
    #[error("{0}")]
    Undefined(String),

    /// An identifier could not be resolved against the experiment's corpora.
    #[error("unresolved id: {0}")]
    UnresolvedId(String),

    /// Error raised while running a specific round for a specific team.
    #[error("team {team}, round {round}: {source}")]
    InRound {
        team: String,
        round: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach team/round context to an error bubbling out of the round loop.
    pub fn in_round(self, team: &str, round: u32) -> Self {
        Error::InRound {
            team: team.to_string(),
            round,
            source: Box::new(self),
        }
    }

    /// True for errors caused by a bad configuration rather than a runtime
    /// failure; the CLI maps these to exit code 1.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Toml(_) => true,
            Error::InRound { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
