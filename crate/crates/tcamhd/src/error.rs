use std::path::{Path, PathBuf};

/// Errors surfaced by file formats, the explorer and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: byte {offset}: {message}", path.display())]
    Format { path: PathBuf, offset: u64, message: String },
    #[error("{}: row {row}: {message}", path.display())]
    Row { path: PathBuf, row: usize, message: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tcamhd_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn format(path: impl AsRef<Path>, offset: u64, message: impl Into<String>) -> Self {
        Error::Format { path: path.as_ref().to_path_buf(), offset, message: message.into() }
    }

    pub fn row(path: impl AsRef<Path>, row: usize, message: impl Into<String>) -> Self {
        Error::Row { path: path.as_ref().to_path_buf(), row, message: message.into() }
    }

    /// Stable machine-readable prefix for CLI diagnostics.
    pub fn code(&self) -> &'static str {
        use tcamhd_core::Error as E;
        match self {
            Error::Io { .. } => "E_IO",
            Error::Format { .. } | Error::Row { .. } => "E_FORMAT",
            Error::Config(_) | Error::Core(E::Config(_)) => "E_CONFIG",
            Error::Core(E::InvalidArgument(_)) => "E_ARGUMENT",
            Error::Core(E::InvalidState(_)) => "E_STATE",
            Error::Core(E::DegenerateInput(_)) => "E_DEGENERATE",
        }
    }
}
