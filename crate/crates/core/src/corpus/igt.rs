//! Interlinear glossed text: a segmented transcription line, an aligned gloss
//! line and a free translation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IgtError {
    #[error("expected three lines (transcription, gloss, translation), found {0}")]
    LineCount(usize),
    #[error("line {line} is blank")]
    EmptyLine { line: usize },
    #[error("transcription has {transcription} words but gloss has {gloss}")]
    Alignment { transcription: usize, gloss: usize },
    #[error("word {word:?} contains an empty morpheme")]
    EmptyMorpheme { word: String },
}

/// Morpheme boundary marker: `-` for affixes, `=` for clitics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Separator {
    #[serde(rename = "-")]
    Affix,
    #[serde(rename = "=")]
    Clitic,
}

impl Separator {
    pub fn from_char(c: char) -> Option<Separator> {
        match c {
            '-' => Some(Separator::Affix),
            '=' => Some(Separator::Clitic),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Separator::Affix => '-',
            Separator::Clitic => '=',
        }
    }
}

/// Splits a word on morpheme separators without validating the pieces.
///
/// Always returns one more piece than separators; pieces may be empty.
pub fn split_morphemes(word: &str) -> (Vec<&str>, Vec<Separator>) {
    let mut pieces = Vec::new();
    let mut separators = Vec::new();
    let mut start = 0;
    for (i, c) in word.char_indices() {
        if let Some(sep) = Separator::from_char(c) {
            pieces.push(&word[start..i]);
            separators.push(sep);
            start = i + c.len_utf8();
        }
    }
    pieces.push(&word[start..]);
    (pieces, separators)
}

/// A whitespace-delimited word split into morphemes.
///
/// `separators[i]` joins `morphemes[i]` and `morphemes[i + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SegmentedWord {
    morphemes: Vec<String>,
    separators: Vec<Separator>,
}

impl SegmentedWord {
    pub fn parse(word: &str) -> Result<SegmentedWord, IgtError> {
        let (pieces, separators) = split_morphemes(word);
        if pieces.iter().any(|p| p.is_empty()) {
            return Err(IgtError::EmptyMorpheme {
                word: word.to_string(),
            });
        }
        Ok(SegmentedWord {
            morphemes: pieces.into_iter().map(str::to_string).collect(),
            separators,
        })
    }

    pub fn morphemes(&self) -> &[String] {
        &self.morphemes
    }

    pub fn separators(&self) -> &[Separator] {
        &self.separators
    }

    /// The word with separators removed, e.g. `sorat` for `sor=at`.
    pub fn unsegmented(&self) -> String {
        self.morphemes.concat()
    }
}

impl fmt::Display for SegmentedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.morphemes.iter().enumerate() {
            if i > 0 {
                write!(f, "{}", self.separators[i - 1].as_char())?;
            }
            f.write_str(m)?;
        }
        Ok(())
    }
}

/// Parses a whitespace-separated line of segmented words.
pub fn parse_segmented_line(line: &str) -> Result<Vec<SegmentedWord>, IgtError> {
    line.split_whitespace().map(SegmentedWord::parse).collect()
}

fn join_words(words: &[SegmentedWord]) -> String {
    words
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

const QUOTE_PAIRS: &[(char, char)] = &[
    ('\'', '\''),
    ('"', '"'),
    ('‘', '’'),
    ('“', '”'),
    ('`', '\''),
    ('‚', '‘'),
];

/// Removes one layer of matching quotes around `text` (after trimming).
///
/// Returns the inner text and the pair that was removed, if any.
pub fn strip_quotes(text: &str) -> (&str, Option<(char, char)>) {
    let trimmed = text.trim();
    let mut chars = trimmed.chars();
    let (Some(first), Some(last)) = (chars.next(), chars.next_back()) else {
        return (trimmed, None);
    };
    for &(open, close) in QUOTE_PAIRS {
        if first == open && last == close {
            let inner = &trimmed[open.len_utf8()..trimmed.len() - close.len_utf8()];
            return (inner.trim(), Some((open, close)));
        }
    }
    (trimmed, None)
}

/// One interlinear glossed example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IgtExample {
    pub id: String,
    pub transcription: Vec<SegmentedWord>,
    pub gloss: Vec<SegmentedWord>,
    /// Free translation with its surrounding quotes removed.
    pub translation: String,
    /// Quote pair stripped from the translation line, kept for re-serialization.
    pub translation_quotes: Option<(char, char)>,
    pub source_lang: String,
    pub target_lang: String,
}

impl IgtExample {
    /// Builds an example from raw transcription / gloss / translation lines.
    pub fn from_lines(
        id: impl Into<String>,
        transcription: &str,
        gloss: &str,
        translation: &str,
    ) -> Result<IgtExample, IgtError> {
        for (i, line) in [transcription, gloss, translation].iter().enumerate() {
            if line.trim().is_empty() {
                return Err(IgtError::EmptyLine { line: i + 1 });
            }
        }
        let transcription = parse_segmented_line(transcription)?;
        let gloss = parse_segmented_line(gloss)?;
        if transcription.len() != gloss.len() {
            return Err(IgtError::Alignment {
                transcription: transcription.len(),
                gloss: gloss.len(),
            });
        }
        let (inner, quotes) = strip_quotes(translation);
        Ok(IgtExample {
            id: id.into(),
            transcription,
            gloss,
            translation: inner.to_string(),
            translation_quotes: quotes,
            source_lang: String::new(),
            target_lang: String::new(),
        })
    }

    pub fn with_languages(mut self, source: &str, target: &str) -> Self {
        self.source_lang = source.to_string();
        self.target_lang = target.to_string();
        self
    }

    /// Segmented transcription line, e.g. `bal se sor=at`.
    pub fn transcription_line(&self) -> String {
        join_words(&self.transcription)
    }

    /// Gloss line, e.g. `dog IAM fish=OBJ`.
    pub fn gloss_line(&self) -> String {
        join_words(&self.gloss)
    }

    /// Transcription with morpheme separators removed.
    pub fn surface_text(&self) -> String {
        self.transcription
            .iter()
            .map(SegmentedWord::unsegmented)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// True when every word has as many gloss morphemes as transcription
    /// morphemes.
    pub fn is_morpheme_aligned(&self) -> bool {
        self.transcription
            .iter()
            .zip(&self.gloss)
            .all(|(t, g)| t.morphemes().len() == g.morphemes().len())
    }

    /// Renders the three-line block, restoring the translation quotes.
    pub fn to_block(&self) -> String {
        let translation = match self.translation_quotes {
            Some((open, close)) => format!("{open}{}{close}", self.translation),
            None => self.translation.clone(),
        };
        format!(
            "{}\n{}\n{}",
            self.transcription_line(),
            self.gloss_line(),
            translation
        )
    }

    pub fn to_record(&self) -> IgtRecord {
        IgtRecord {
            id: self.id.clone(),
            transcription: self.transcription_line(),
            gloss: self.gloss_line(),
            translation: self.translation.clone(),
        }
    }
}

/// Parses a three-line IGT block: transcription, gloss and translation.
///
/// Trailing blank lines are ignored; any other blank line is an error.
pub fn parse_igt_block(id: impl Into<String>, text: &str) -> Result<IgtExample, IgtError> {
    let mut lines: Vec<&str> = text.lines().collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.len() != 3 {
        if let Some(i) = lines.iter().position(|l| l.trim().is_empty()) {
            return Err(IgtError::EmptyLine { line: i + 1 });
        }
        return Err(IgtError::LineCount(lines.len()));
    }
    IgtExample::from_lines(id, lines[0], lines[1], lines[2])
}

/// JSON-lines representation: `{"id", "transcription", "gloss", "translation"}`
/// with raw segmented lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IgtRecord {
    pub id: String,
    pub transcription: String,
    pub gloss: String,
    pub translation: String,
}

impl IgtRecord {
    pub fn parse(&self) -> Result<IgtExample, IgtError> {
        IgtExample::from_lines(
            self.id.clone(),
            &self.transcription,
            &self.gloss,
            &self.translation,
        )
    }
}
