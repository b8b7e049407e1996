// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;

/// What went wrong while reading a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorKind {
    /// Not valid TOML.
    Syntax,
    /// A key the schema does not know.
    UnknownKey,
    /// Wrong type, or a value outside its domain.
    Invalid,
    /// A malformed `--override` argument.
    Override,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    /// Dotted key paths involved, when known.
    pub keys: Vec<String>,
    /// 1-based line of each key in the source, `None` for keys that were not
    /// in the file (defaults or overrides).
    pub lines: Vec<Option<usize>>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let located: Vec<String> = self
            .keys
            .iter()
            .zip(&self.lines)
            .map(|(k, l)| match l {
                Some(l) => format!("`{k}` (line {l})"),
                None => format!("`{k}` (not set in file)"),
            })
            .collect();
        if located.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", located.join(", "), self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {error}")]
    Config { path: PathBuf, error: ConfigError },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Sim(#[from] mavtrack_core::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Stable, machine-readable category printed with every failure.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config { error, .. } => match error.kind {
                ConfigErrorKind::Syntax => "config-syntax",
                ConfigErrorKind::UnknownKey => "config-unknown-key",
                ConfigErrorKind::Invalid => "config-invalid",
                ConfigErrorKind::Override => "config-override",
            },
            CliError::Io { .. } => "io",
            CliError::Csv { .. } | CliError::Parse { .. } => "input-format",
            CliError::Sim(_) => "simulation",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Csv { .. } | CliError::Parse { .. } => 5,
            CliError::Sim(_) => 6,
        }
    }
}
