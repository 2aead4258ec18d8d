use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys, measure strings or missing input paths.
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        #[source]
        source: holefill::Error,
    },

    #[error(transparent)]
    Runtime(#[from] holefill::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    /// The bridge score file does not cover every hole.
    #[error("{} hole(s) lack bridge scores{}", missing.len(), describe_task_file(task_file))]
    Coverage {
        missing: Vec<(String, String)>,
        task_file: Option<PathBuf>,
    },
}

fn describe_task_file(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("; tasks written to {}", p.display()),
        None => "; configure corpus and queries to write a task file".into(),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Coverage { .. } => 2,
            Self::Data { .. } | Self::Runtime(_) | Self::Io { .. } => 1,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
