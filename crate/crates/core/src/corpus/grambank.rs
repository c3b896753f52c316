//! Grambank feature tables in the CLDF release layout.
//!
//! Reads `values.csv` (`Language_ID`, `Parameter_ID`, `Value`, `Code_ID`),
//! `parameters.csv` (`ID`, `Name`, `Description`) and, when present,
//! `codes.csv` (`ID`, `Name`). Feature descriptions are markdown with
//! `## Summary` and `## Procedure` sections.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, CorpusError};
use crate::lang::Language;

/// A feature value code: an integer, or Grambank's `?`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypCode {
    Known(i64),
    Unknown,
}

impl TypCode {
    pub fn parse(value: &str) -> Option<TypCode> {
        match value.trim() {
            "?" => Some(TypCode::Unknown),
            v => v.parse().ok().map(TypCode::Known),
        }
    }
}

impl fmt::Display for TypCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypCode::Known(c) => write!(f, "{c}"),
            TypCode::Unknown => f.write_str("?"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureValue {
    /// Language code as requested by the caller (e.g. `kgv`).
    pub language: String,
    /// Code label such as `absent`; `unknown` for `?`.
    pub value_label: String,
    pub code: TypCode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypFeature {
    pub feature_id: String,
    pub question: String,
    /// One entry per requested language that has a row, in request order.
    pub values: Vec<FeatureValue>,
    pub summary: String,
    pub procedure: String,
}

impl TypFeature {
    pub fn value_for(&self, language: &str) -> Option<&FeatureValue> {
        self.values.iter().find(|v| v.language == language)
    }
}

#[derive(Debug, Deserialize)]
struct ValueRow {
    #[serde(rename = "Language_ID")]
    language_id: String,
    #[serde(rename = "Parameter_ID")]
    parameter_id: String,
    #[serde(rename = "Value")]
    value: String,
    #[serde(rename = "Code_ID", default)]
    code_id: String,
}

#[derive(Debug, Deserialize)]
struct ParameterRow {
    #[serde(rename = "ID")]
    id: String,
    #[serde(rename = "Name")]
    name: String,
    #[serde(rename = "Description", default)]
    description: String,
}

#[derive(Debug, Deserialize)]
struct CodeRow {
    #[serde(rename = "ID")]
    id: String,
    #[serde(rename = "Name")]
    name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Parameter {
    question: String,
    summary: String,
    procedure: String,
}

/// Parsed Grambank tables, not yet restricted to any language.
#[derive(Debug, Clone, Default)]
pub struct GrambankTables {
    /// (language id, feature id) -> (raw value, code id)
    values: HashMap<(String, String), (String, String)>,
    languages: HashMap<String, usize>,
    parameters: BTreeMap<String, Parameter>,
    codes: HashMap<String, String>,
}

fn read_csv<T: serde::de::DeserializeOwned>(table: &str, text: &str) -> Result<Vec<T>, CorpusError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CorpusError::Grambank {
            table: table.to_string(),
            message: e.to_string(),
        })
}

/// Splits a markdown description into its summary and procedure sections.
fn split_description(description: &str) -> (String, String) {
    let mut summary = Vec::new();
    let mut procedure = Vec::new();
    let mut current: Option<&mut Vec<&str>> = None;
    let mut saw_heading = false;
    for line in description.lines() {
        if let Some(heading) = line.trim_start().strip_prefix('#') {
            saw_heading = true;
            let heading = heading.trim_start_matches('#').trim().to_lowercase();
            current = if heading.starts_with("summary") {
                Some(&mut summary)
            } else if heading.starts_with("procedure") {
                Some(&mut procedure)
            } else {
                None
            };
            continue;
        }
        if let Some(buf) = current.as_mut() {
            buf.push(line);
        }
    }
    if !saw_heading {
        return (description.trim().to_string(), String::new());
    }
    (
        summary.join("\n").trim().to_string(),
        procedure.join("\n").trim().to_string(),
    )
}

/// Parses the three CSV tables from strings.
pub fn parse_grambank(
    values_csv: &str,
    parameters_csv: &str,
    codes_csv: Option<&str>,
) -> Result<GrambankTables, CorpusError> {
    let mut tables = GrambankTables::default();
    for row in read_csv::<ParameterRow>("parameters", parameters_csv)? {
        let (summary, procedure) = split_description(&row.description);
        tables.parameters.insert(
            row.id,
            Parameter {
                question: row.name.trim().to_string(),
                summary,
                procedure,
            },
        );
    }
    if let Some(codes) = codes_csv {
        for row in read_csv::<CodeRow>("codes", codes)? {
            tables.codes.insert(row.id, row.name.trim().to_string());
        }
    }
    for row in read_csv::<ValueRow>("values", values_csv)? {
        if TypCode::parse(&row.value).is_none() {
            return Err(CorpusError::Grambank {
                table: "values".into(),
                message: format!(
                    "{} / {}: value {:?} is neither an integer nor ?",
                    row.language_id, row.parameter_id, row.value
                ),
            });
        }
        if !tables.parameters.contains_key(&row.parameter_id) {
            return Err(CorpusError::Grambank {
                table: "values".into(),
                message: format!("unknown parameter {}", row.parameter_id),
            });
        }
        *tables.languages.entry(row.language_id.clone()).or_default() += 1;
        tables
            .values
            .insert((row.language_id, row.parameter_id), (row.value, row.code_id));
    }
    Ok(tables)
}

impl GrambankTables {
    fn language_key<'a>(&self, code: &'a str) -> Option<&'a str> {
        if self.languages.contains_key(code) {
            return Some(code);
        }
        Language::from_code(code)
            .glottocode()
            .filter(|g| self.languages.contains_key(*g))
    }

    fn label(&self, code: TypCode, code_id: &str) -> String {
        match code {
            TypCode::Unknown => "unknown".into(),
            TypCode::Known(c) => self.codes.get(code_id).cloned().unwrap_or_else(|| c.to_string()),
        }
    }

    /// Features with a value for at least one of `languages`, ordered by
    /// feature id. Languages are ISO codes (mapped to glottocodes for the
    /// built-in ones) or the release's own language ids.
    pub fn features(&self, languages: &[&str]) -> Result<Vec<TypFeature>, CorpusError> {
        let keys = languages
            .iter()
            .map(|&code| {
                self.language_key(code)
                    .map(|key| (code, key))
                    .ok_or_else(|| CorpusError::MissingLanguage(code.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut features = Vec::new();
        for (id, param) in &self.parameters {
            let values: Vec<FeatureValue> = keys
                .iter()
                .filter_map(|&(code, key)| {
                    let (raw, code_id) = self.values.get(&(key.to_string(), id.clone()))?;
                    let typ = TypCode::parse(raw)?;
                    Some(FeatureValue {
                        language: code.to_string(),
                        value_label: self.label(typ, code_id),
                        code: typ,
                    })
                })
                .collect();
            if values.is_empty() {
                continue;
            }
            features.push(TypFeature {
                feature_id: id.clone(),
                question: param.question.clone(),
                values,
                summary: param.summary.clone(),
                procedure: param.procedure.clone(),
            });
        }
        Ok(features)
    }
}

/// Loads a Grambank CLDF directory and extracts the features for
/// `languages`.
pub fn load_grambank(dir: &Path, languages: &[&str]) -> Result<Vec<TypFeature>, CorpusError> {
    let values = read_to_string(&dir.join("values.csv"))?;
    let parameters = read_to_string(&dir.join("parameters.csv"))?;
    let codes_path = dir.join("codes.csv");
    let codes = if codes_path.exists() {
        Some(read_to_string(&codes_path)?)
    } else {
        None
    };
    parse_grambank(&values, &parameters, codes.as_deref())?.features(languages)
}
