use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{read_to_string, CorpusError, IgtExample, IgtRecord};

/// A sentence pair stored low-resource side first: `source` is the XLR text
/// and `target` its high-resource translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
}

impl ParallelPair {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Result<ParallelPair, CorpusError> {
        let pair = ParallelPair {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            gloss: None,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn with_gloss(mut self, gloss: impl Into<String>) -> Self {
        self.gloss = Some(gloss.into());
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.source.trim().is_empty() {
            return Err(CorpusError::EmptyField {
                id: self.id.clone(),
                field: "source",
            });
        }
        if self.target.trim().is_empty() {
            return Err(CorpusError::EmptyField {
                id: self.id.clone(),
                field: "target",
            });
        }
        Ok(())
    }

    /// Segmented transcription, gloss line and translation of an IGT example.
    pub fn from_igt(example: &IgtExample) -> ParallelPair {
        ParallelPair {
            id: example.id.clone(),
            source: example.transcription_line(),
            target: example.translation.clone(),
            gloss: Some(example.gloss_line()),
        }
    }
}

/// Reads a JSON-lines file, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let text = read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|source| CorpusError::Json {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })
        })
        .collect()
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializing plain data");
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| CorpusError::io(path, e))
}

pub fn load_parallel_jsonl(path: &Path) -> Result<Vec<ParallelPair>, CorpusError> {
    let pairs: Vec<ParallelPair> = read_jsonl(path)?;
    for pair in &pairs {
        pair.validate()?;
    }
    Ok(pairs)
}

/// Loads `{"id", "transcription", "gloss", "translation"}` records.
pub fn load_igt_jsonl(
    path: &Path,
    source_lang: &str,
    target_lang: &str,
) -> Result<Vec<IgtExample>, CorpusError> {
    let records: Vec<IgtRecord> = read_jsonl(path)?;
    records
        .iter()
        .map(|rec| {
            rec.parse()
                .map(|ex| ex.with_languages(source_lang, target_lang))
                .map_err(|source| CorpusError::Igt {
                    id: rec.id.clone(),
                    source,
                })
        })
        .collect()
}
