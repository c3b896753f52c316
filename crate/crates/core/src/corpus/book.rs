//! Grammar-book segmentation into parallel examples and explanatory prose.
//!
//! Example blocks are recognised from plain-text formatting: a transcription
//! line, a gloss line and a quoted translation line, optionally preceded by
//! an example number. Short lines pairing a word or phrase with a quoted
//! translation count as parallel too. Everything else is prose.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{read_to_string, split_morphemes, CorpusError, IgtError, IgtExample};
use crate::glossing::is_gram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentLabel {
    Parallel,
    NonParallel,
}

/// A maximal run of consecutive lines sharing a label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookSegment {
    /// Exact text of the lines, newlines included.
    pub text: String,
    pub label: SegmentLabel,
    /// Half-open range of 0-based line indices.
    pub line_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BookDocument {
    pub language: String,
    pub segments: Vec<BookSegment>,
}

/// Which part of a book to project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    Para,
    NonPara,
}

impl Subset {
    pub fn file_name(self) -> &'static str {
        match self {
            Subset::All => "book_all.txt",
            Subset::Para => "book_para.txt",
            Subset::NonPara => "book_non_para.txt",
        }
    }
}

impl BookDocument {
    /// Reassembles the original book text.
    pub fn full_text(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn line_count(&self) -> usize {
        self.segments.last().map_or(0, |s| s.line_span.1)
    }

    /// Builds a document from already-split subsets, labelling each whole
    /// file as one segment (para first).
    pub fn from_subsets(language: &str, para: &str, non_para: &str) -> BookDocument {
        let mut segments = Vec::new();
        let mut start = 0;
        for (text, label) in [
            (para, SegmentLabel::Parallel),
            (non_para, SegmentLabel::NonParallel),
        ] {
            if text.is_empty() {
                continue;
            }
            let mut text = text.to_string();
            if !text.ends_with('\n') && label == SegmentLabel::Parallel && !non_para.is_empty() {
                text.push('\n');
            }
            let n = text.split_inclusive('\n').count();
            segments.push(BookSegment {
                text,
                label,
                line_span: (start, start + n),
            });
            start += n;
        }
        BookDocument {
            language: language.to_string(),
            segments,
        }
    }
}

/// Concatenates the segments matching `which`, in book order.
pub fn project_subset(doc: &BookDocument, which: Subset) -> String {
    let wanted = match which {
        Subset::All => return doc.full_text(),
        Subset::Para => SegmentLabel::Parallel,
        Subset::NonPara => SegmentLabel::NonParallel,
    };
    doc.segments
        .iter()
        .filter(|s| s.label == wanted)
        .map(|s| s.text.as_str())
        .collect()
}

/// Non-blank line count and whitespace-token count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BookStats {
    pub lines: usize,
    pub tokens: usize,
}

impl Add for BookStats {
    type Output = BookStats;
    fn add(self, rhs: BookStats) -> BookStats {
        BookStats {
            lines: self.lines + rhs.lines,
            tokens: self.tokens + rhs.tokens,
        }
    }
}

impl AddAssign for BookStats {
    fn add_assign(&mut self, rhs: BookStats) {
        *self = *self + rhs;
    }
}

impl fmt::Display for BookStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} lines / {} tokens", self.lines, self.tokens)
    }
}

pub fn book_stats(text: &str) -> BookStats {
    let mut stats = BookStats::default();
    for line in text.lines() {
        let n = line.split_whitespace().count();
        if n > 0 {
            stats.lines += 1;
            stats.tokens += n;
        }
    }
    stats
}

/// Regex table describing one book's example markup.
///
/// Loaded from JSON; missing keys take the defaults, unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormatRules {
    /// A line holding only an example number, e.g. `(17)`.
    pub number_line: String,
    /// Example number at the start of a transcription line, stripped before
    /// the alignment check.
    pub number_prefix: String,
    /// A quoted free-translation line.
    pub translation_line: String,
    /// A short word or phrase followed by its quoted translation.
    pub word_pair_line: String,
    /// Only treat a line as a gloss when it contains at least one
    /// grammatical label (`3SG`, `OBJ`, ...).
    pub gloss_requires_gram: bool,
}

impl Default for FormatRules {
    fn default() -> Self {
        FormatRules {
            number_line: r"^\s*(?:\(\d+[a-z]?\)|\d+[a-z]?[.)])\s*$".into(),
            number_prefix: r"^\s*(?:\(\d+[a-z]?\)|\d+[a-z]?[.)]|[a-z][.)])\s+".into(),
            translation_line: r#"^\s*[‘'`"“].*[’'"”](?:\s*[\[(][^\])]*[\])])?\s*$"#.into(),
            word_pair_line: r#"^\s*(?:\S+\s+){1,4}[‘`"“'][^‘’`"“”]+[’'"”]\s*[.,;]?\s*$"#.into(),
            gloss_requires_gram: true,
        }
    }
}

impl FormatRules {
    pub fn from_json_file(path: &Path) -> Result<FormatRules, CorpusError> {
        let text = read_to_string(path)?;
        serde_json::from_str(&text).map_err(|source| CorpusError::Json {
            path: path.to_path_buf(),
            line: source.line(),
            source,
        })
    }

    fn compile(&self) -> Result<CompiledRules, CorpusError> {
        let re = |name: &str, pattern: &str| {
            Regex::new(pattern).map_err(|e| CorpusError::Format {
                line: 0,
                message: format!("rule {name}: {e}"),
            })
        };
        Ok(CompiledRules {
            number_line: re("number_line", &self.number_line)?,
            number_prefix: re("number_prefix", &self.number_prefix)?,
            translation_line: re("translation_line", &self.translation_line)?,
            word_pair_line: re("word_pair_line", &self.word_pair_line)?,
            gloss_requires_gram: self.gloss_requires_gram,
        })
    }
}

struct CompiledRules {
    number_line: Regex,
    number_prefix: Regex,
    translation_line: Regex,
    word_pair_line: Regex,
    gloss_requires_gram: bool,
}

/// An example-like block whose gloss did not align; its lines stay prose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedBlock {
    /// 1-based line numbers of the transcription and translation lines.
    pub first_line: usize,
    pub last_line: usize,
    pub error: IgtError,
}

impl fmt::Display for MalformedBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lines {}-{}: {}",
            self.first_line, self.last_line, self.error
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub document: BookDocument,
    /// Parallel examples recovered from the book, in order.
    pub examples: Vec<IgtExample>,
    pub malformed: Vec<MalformedBlock>,
}

fn has_gram_piece(line: &str) -> bool {
    line.split_whitespace()
        .flat_map(|w| split_morphemes(w).0)
        .any(is_gram)
}

/// Labels every line of `book_text` as parallel or non-parallel.
///
/// Blocks whose gloss fails to align are reported in
/// [`Segmentation::malformed`] and left as prose.
pub fn segment_book(
    language: &str,
    book_text: &str,
    rules: &FormatRules,
) -> Result<Segmentation, CorpusError> {
    let rules = rules.compile()?;
    let lines: Vec<&str> = book_text.split_inclusive('\n').collect();
    let content = |i: usize| lines[i].trim_end_matches(['\n', '\r']);
    let mut parallel = vec![false; lines.len()];
    let mut examples = Vec::new();
    let mut malformed = Vec::new();

    for t in 2..lines.len() {
        let (tr, gl, tl) = (t - 2, t - 1, t);
        if parallel[tr] || parallel[gl] || !rules.translation_line.is_match(content(tl)) {
            continue;
        }
        let transcription = rules.number_prefix.replace(content(tr), "");
        let gloss = content(gl);
        if transcription.trim().is_empty()
            || gloss.trim().is_empty()
            || rules.translation_line.is_match(&transcription)
            || rules.translation_line.is_match(gloss)
        {
            continue;
        }
        if rules.gloss_requires_gram && !has_gram_piece(gloss) {
            continue;
        }
        match IgtExample::from_lines(
            format!("{language}-book-{}", tr + 1),
            &transcription,
            gloss,
            content(tl),
        ) {
            Ok(example) => {
                parallel[tr..=tl].iter_mut().for_each(|p| *p = true);
                if tr > 0 && !parallel[tr - 1] && rules.number_line.is_match(content(tr - 1)) {
                    parallel[tr - 1] = true;
                }
                examples.push(example.with_languages(language, crate::lang::ENGLISH));
            }
            Err(error) => {
                let block = MalformedBlock {
                    first_line: tr + 1,
                    last_line: tl + 1,
                    error,
                };
                log::warn!("{language} book: malformed example block at {block}");
                malformed.push(block);
            }
        }
    }

    for (i, flag) in parallel.iter_mut().enumerate() {
        if !*flag && rules.word_pair_line.is_match(content(i)) {
            *flag = true;
        }
    }

    let mut segments: Vec<BookSegment> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let label = if parallel[i] {
            SegmentLabel::Parallel
        } else {
            SegmentLabel::NonParallel
        };
        match segments.last_mut() {
            Some(seg) if seg.label == label => {
                seg.text.push_str(line);
                seg.line_span.1 = i + 1;
            }
            _ => segments.push(BookSegment {
                text: (*line).to_string(),
                label,
                line_span: (i, i + 1),
            }),
        }
    }

    Ok(Segmentation {
        document: BookDocument {
            language: language.to_string(),
            segments,
        },
        examples,
        malformed,
    })
}
