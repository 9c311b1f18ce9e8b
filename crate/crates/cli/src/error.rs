use std::path::Path;

use carbon_forecast::ErrorKind;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: carbon_forecast::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run directory incomplete: {0}")]
    Incomplete(String),
}

impl CliError {
    /// Process exit code: 2 usage or config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core { source, .. } => match source.kind() {
                ErrorKind::Usage => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numerical => 4,
            },
            CliError::Io { .. } | CliError::Incomplete(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Attaches a stage or operation label to core errors.
pub trait Context<T> {
    fn context(self, context: &str) -> CliResult<T>;
}

impl<T> Context<T> for carbon_forecast::Result<T> {
    fn context(self, context: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: context.to_string(),
            source,
        })
    }
}
