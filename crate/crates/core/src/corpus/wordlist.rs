use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, CorpusError};

/// One bilingual dictionary line: XLR headword and its translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordlistEntry {
    pub headword: String,
    pub translation: String,
}

/// Parses a two-column tab-separated wordlist. Blank lines are skipped and
/// homographs are kept in file order.
pub fn parse_wordlist(text: &str) -> Result<Vec<WordlistEntry>, CorpusError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let columns: Vec<&str> = line.split('\t').collect();
        if columns.len() != 2 {
            return Err(CorpusError::Format {
                line: i + 1,
                message: format!("expected 2 tab-separated columns, found {}", columns.len()),
            });
        }
        let headword = columns[0].trim();
        if headword.is_empty() {
            return Err(CorpusError::Format {
                line: i + 1,
                message: "empty headword".into(),
            });
        }
        entries.push(WordlistEntry {
            headword: headword.to_string(),
            translation: columns[1].trim().to_string(),
        });
    }
    Ok(entries)
}

pub fn load_wordlist(path: &Path) -> Result<Vec<WordlistEntry>, CorpusError> {
    parse_wordlist(&read_to_string(path)?)
}
