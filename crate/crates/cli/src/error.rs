use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: field `{field}`: {message}")]
    Field {
        line: usize,
        field: String,
        message: String,
    },

    #[error("missing field `{field}` in [{section}]")]
    MissingField {
        section: &'static str,
        field: &'static str,
    },

    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: secfreq_core::Error,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn stage(stage: &'static str) -> impl FnOnce(secfreq_core::Error) -> Self {
        move |source| CliError::Stage { stage, source }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
