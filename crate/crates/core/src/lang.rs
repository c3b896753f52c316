//! Language identities and translation directions.

use std::fmt;

use serde::{Deserialize, Serialize};

/// ISO 639-3 code of the high-resource pivot language.
pub const ENGLISH: &str = "eng";

/// A language as it appears in prompts and reports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Language {
    /// ISO 639-3 code, e.g. `kgv`.
    pub code: String,
    /// Display name used inside prompt text.
    pub name: String,
    /// One-sentence description opening the translation instruction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl Language {
    pub fn new(code: impl Into<String>, name: impl Into<String>) -> Self {
        Language {
            code: code.into(),
            name: name.into(),
            description: None,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }

    /// Built-in metadata for the languages used in the experiments.
    ///
    /// Unknown codes get the code itself as their display name.
    pub fn from_code(code: &str) -> Language {
        match code {
            "kgv" => Language::new("kgv", "Kalamang")
                .with_description("Kalamang is a language spoken on the Karas Islands in West Papua."),
            "npi" => Language::new("npi", "Nepali")
                .with_description("Nepali is a language spoken in Nepal and parts of India."),
            "gug" => Language::new("gug", "Guarani")
                .with_description("Paraguayan Guarani is a language spoken in Paraguay."),
            "eng" => Language::new("eng", "English"),
            other => Language::new(other, other),
        }
    }

    pub fn is_english(&self) -> bool {
        self.code == ENGLISH
    }

    /// Glottocode used by Grambank for the built-in languages.
    pub fn glottocode(&self) -> Option<&'static str> {
        match self.code.as_str() {
            "kgv" => Some("kara1499"),
            "npi" => Some("nepa1254"),
            "gug" => Some("para1311"),
            "eng" => Some("stan1293"),
            _ => None,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// A translation direction, source to target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub source: Language,
    pub target: Language,
}

impl Direction {
    pub fn new(source: Language, target: Language) -> Self {
        Direction { source, target }
    }

    /// Parses `kgv-eng` / `kgv->eng` style strings.
    pub fn parse(spec: &str) -> Option<Direction> {
        let (src, tgt) = spec
            .split_once("->")
            .or_else(|| spec.split_once('-'))
            .or_else(|| spec.split_once(':'))?;
        let (src, tgt) = (src.trim(), tgt.trim());
        if src.is_empty() || tgt.is_empty() || src == tgt {
            return None;
        }
        Some(Direction::new(Language::from_code(src), Language::from_code(tgt)))
    }

    pub fn reversed(&self) -> Direction {
        Direction::new(self.target.clone(), self.source.clone())
    }

    /// The language the book and wordlist describe: whichever side is not
    /// English, or the target when neither is.
    pub fn low_resource(&self) -> &Language {
        if !self.source.is_english() {
            &self.source
        } else {
            &self.target
        }
    }

    /// The other side of [`Direction::low_resource`].
    pub fn high_resource(&self) -> &Language {
        if !self.source.is_english() {
            &self.target
        } else {
            &self.source
        }
    }

    /// True when the source side is the low-resource language, i.e. when
    /// inputs come from the `source` field of stored parallel pairs.
    pub fn from_low_resource(&self) -> bool {
        std::ptr::eq(self.low_resource(), &self.source)
    }

    /// `kgv-eng` style label used in file names and reports.
    pub fn label(&self) -> String {
        format!("{}-{}", self.source.code, self.target.code)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}--{}", self.source.code, self.target.code)
    }
}
