//! Ingestion and validation of source data: parallel pairs, IGT examples,
//! wordlists, grammar-book text and Grambank feature tables.

mod book;
mod grambank;
mod igt;
mod parallel;
mod split;
mod wordlist;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use book::{
    book_stats, project_subset, segment_book, BookDocument, BookSegment, BookStats, FormatRules,
    MalformedBlock, SegmentLabel, Segmentation, Subset,
};
pub use grambank::{load_grambank, parse_grambank, FeatureValue, GrambankTables, TypCode, TypFeature};
pub use igt::{
    parse_igt_block, parse_segmented_line, split_morphemes, strip_quotes, IgtError, IgtExample,
    IgtRecord, SegmentedWord, Separator,
};
pub use parallel::{load_igt_jsonl, load_parallel_jsonl, read_jsonl, write_jsonl, ParallelPair};
pub use split::{check_disjoint, split_train_dev, DatasetSplit, Identified, SplitName};
pub use wordlist::{load_wordlist, parse_wordlist, WordlistEntry};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("example {id}: field `{field}` is empty")]
    EmptyField { id: String, field: &'static str },
    #[error("example {id}: {source}")]
    Igt {
        id: String,
        #[source]
        source: IgtError,
    },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("id {id:?} appears in both {first} and {second}")]
    OverlappingSplits {
        id: String,
        first: SplitName,
        second: SplitName,
    },
    #[error("Grambank table {table}: {message}")]
    Grambank { table: String, message: String },
    #[error("no Grambank values for language {0:?}")]
    MissingLanguage(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))
}
