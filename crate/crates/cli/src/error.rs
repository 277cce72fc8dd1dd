use thiserror::Error;

use seminorm_bounds::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid configuration; nothing was computed.
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Error raised while validating a config section.
    pub fn config(section: &str, e: CoreError) -> Self {
        match e {
            CoreError::Resource(_) => CliError::Core { context: section.to_string(), source: e },
            _ => CliError::Config(format!("{section}: {e}")),
        }
    }

    pub fn core(context: impl Into<String>) -> impl FnOnce(CoreError) -> Self {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core { source, .. } => match source {
                CoreError::InvalidInput(_) => 2,
                CoreError::Resource(_) => 4,
                _ => 3,
            },
            CliError::Io(_) => 1,
        }
    }
}
