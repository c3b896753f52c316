//! Experiment runner: config-driven commands, results persistence and
//! report generation.

pub mod commands;
pub mod config;
pub mod report;
pub mod runner;
pub mod settings;

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] bookprobe::corpus::CorpusError),
    #[error(transparent)]
    Prompt(#[from] bookprobe::prompts::PromptError),
    #[error(transparent)]
    Grammaticality(#[from] bookprobe::grammaticality::GrammaticalityError),
    #[error(transparent)]
    Metric(#[from] bookprobe::metrics::MetricError),
    #[error(transparent)]
    Analysis(#[from] bookprobe::analysis::AnalysisError),
    #[error("no summary.json found under {0}")]
    MissingSummary(String),
    #[error("{path}: {message}")]
    BadRecord { path: PathBuf, message: String },
    #[error("summary and records disagree:\n{0}")]
    Inconsistent(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
