use std::path::PathBuf;

use thiserror::Error;

/// Exit status: every verdict passed.
pub const EXIT_OK: u8 = 0;
/// At least one verdict failed (or a roundtrip check did not match).
pub const EXIT_VERDICT: u8 = 1;
/// Bad arguments, configuration, model file or input.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: sideinfo_core::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),
}

impl CliError {
    pub fn core(context: impl Into<String>) -> impl FnOnce(sideinfo_core::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<sideinfo_core::Error> for CliError {
    fn from(source: sideinfo_core::Error) -> Self {
        CliError::Core {
            context: "error".into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
