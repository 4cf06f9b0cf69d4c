use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: kfusion::Error,
    },
}

impl CliError {
    pub fn core(context: &str, source: kfusion::Error) -> Self {
        CliError::Core {
            context: context.to_string(),
            source,
        }
    }

    pub fn context(self, outer: &str) -> Self {
        match self {
            CliError::Input(msg) => CliError::Input(format!("{outer}: {msg}")),
            CliError::Core { context, source } => CliError::Core {
                context: format!("{outer}: {context}"),
                source,
            },
        }
    }

    /// 1 when a hypothesis fails mathematically, 2 for bad input, 3 for
    /// numerical breakdown.
    pub fn exit_code(&self) -> u8 {
        use kfusion::Error as E;
        match self {
            CliError::Input(_) => 2,
            CliError::Core { source, .. } => match source {
                E::Hypothesis(_) => 1,
                E::DimensionMismatch(_)
                | E::InvalidTolerance(_)
                | E::InvalidWeight { .. }
                | E::InvalidArgument(_)
                | E::ZeroOperator => 2,
                E::NonFinite | E::NoConvergence { .. } | E::NotSymmetric(_) | E::Singular(_) => 3,
            },
        }
    }
}

/// Attaches a context string to library errors.
pub trait Context<T> {
    fn ctx(self, what: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for kfusion::Result<T> {
    fn ctx(self, what: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::core(what, e))
    }
}
