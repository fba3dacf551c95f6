use std::path::PathBuf;

/// Errors raised by the harness. [`BenchError::exit_code`] maps them onto the
/// CLI's exit status.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// The configuration file is unreadable, malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),
    /// A file could not be read or written.
    #[error("{}: {source}", path.display())]
    Io {
        /// File or directory involved.
        path: PathBuf,
        /// Underlying failure.
        #[source]
        source: std::io::Error,
    },
    /// A data file has the wrong shape or content.
    #[error("{file}, row {row}: {message}")]
    Format {
        /// File name inside the dataset directory.
        file: String,
        /// One-based row number (0 when the problem is not row specific).
        row: usize,
        /// Description.
        message: String,
    },
    /// A failure of the core routines, with the job that hit it.
    #[error("{context}: {source}")]
    Core {
        /// Which job failed, e.g. `partition 3, model sje`.
        context: String,
        /// Underlying failure.
        #[source]
        source: zsc_core::Error,
    },
}

impl BenchError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    pub(crate) fn format(file: &str, row: usize, message: impl Into<String>) -> Self {
        BenchError::Format { file: file.to_string(), row, message: message.into() }
    }

    pub(crate) fn core(context: impl Into<String>, source: zsc_core::Error) -> Self {
        BenchError::Core { context: context.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
