use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] twolevel_core::Error),

    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data; `line` is 1-based and 0 when not line-specific.
    #[error("{}", format_data(path, *line, msg))]
    Data { path: Option<PathBuf>, line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn format_data(path: &Option<PathBuf>, line: usize, msg: &str) -> String {
    let place = match (path, line) {
        (Some(p), 0) => format!("{}: ", p.display()),
        (Some(p), l) => format!("{}:{l}: ", p.display()),
        (None, 0) => String::new(),
        (None, l) => format!("line {l}: "),
    };
    format!("data error: {place}{msg}")
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn data(line: usize, msg: impl Into<String>) -> Self {
        AppError::Data { path: None, line, msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// Attaches a file path to a data error that lacks one.
    pub fn in_file(self, file: impl Into<PathBuf>) -> Self {
        match self {
            AppError::Data { path: None, line, msg } => {
                AppError::Data { path: Some(file.into()), line, msg }
            }
            other => other,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for data and I/O.
    pub fn exit_code(&self) -> i32 {
        use twolevel_core::Error as E;
        match self {
            AppError::Config(_) => 2,
            AppError::Core(E::Config(_) | E::EmptyDesign | E::DegenerateSweep(_)) => 2,
            AppError::Core(_) | AppError::Data { .. } | AppError::Io { .. } => 3,
        }
    }
}
