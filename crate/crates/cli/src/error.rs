use ccn_agg::Error as ModelError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 when the analysis did not
    /// converge, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse { .. } | Self::Validation(_) => 2,
            Self::Model(ModelError::NonConvergence { .. }) => 3,
            Self::Model(
                ModelError::InvalidCatalog(_)
                | ModelError::Domain(_)
                | ModelError::InfeasibleCapacity { .. }
                | ModelError::InvalidTrace(_)
                | ModelError::InvalidConfig(_),
            ) => 2,
            Self::Model(_) | Self::Io(_) => 1,
        }
    }
}
