use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const EXIT_IO: i32 = 1;
    pub const EXIT_CONFIG: i32 = 2;
    pub const EXIT_NUMERICAL: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => Self::EXIT_CONFIG,
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
            CliError::Io { .. } => Self::EXIT_IO,
        }
    }

    pub(crate) fn numerical(err: ancilla_bell::Error) -> Self {
        CliError::Numerical(err.to_string())
    }
}
