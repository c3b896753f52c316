//! Experiment configuration files.

use std::path::{Path, PathBuf};

use bookprobe::grammaticality::CorruptionSetting;
use bookprobe::lang::Direction;
use bookprobe_llm::{EndpointProfile, RetryPolicy};
use serde::{Deserialize, Serialize};

use crate::settings::{Component, Setting};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Translate,
    Judge,
    Gloss,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// Test set: parallel JSONL for translate/judge, IGT JSONL for gloss.
    pub test: PathBuf,
    /// Directory with book_all.txt, book_para.txt and book_non_para.txt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub book_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wordlist: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub para_book: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub para_train: Option<PathBuf>,
    /// Glossed training examples (IGT JSONL) for Top-Class and gloss
    /// retrieval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub igt_train: Option<PathBuf>,
    /// Directory with Grambank values.csv, parameters.csv and codes.csv.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grambank_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub profile: EndpointProfile,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry: Option<RetryPolicy>,
}

fn default_max_output_tokens() -> u32 {
    512
}

fn default_in_flight() -> usize {
    4
}

fn default_threshold() -> f64 {
    bookprobe::prompts::W4W_DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub task: Task,
    /// `src-tgt` ISO codes, e.g. `eng-kgv`. Judge and gloss runs use the
    /// low-resource side.
    pub direction: String,
    pub setting: String,
    pub data: DataPaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    /// Examples retrieved per word in star_shot settings; 5 for
    /// translation and judgment, 10 for glossing when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval_k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<CorruptionSetting>,
    #[serde(default = "default_threshold")]
    pub w4w_threshold: f64,
    /// Only the first N test examples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentConfig {
    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let d = &mut self.data;
        resolve(base, &mut d.test);
        for p in [
            &mut d.book_dir,
            &mut d.wordlist,
            &mut d.para_book,
            &mut d.para_train,
            &mut d.igt_train,
            &mut d.grambank_dir,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
        if let Some(c) = self.model.as_mut().and_then(|m| m.cache_dir.as_mut()) {
            resolve(base, c);
        }
        resolve(base, &mut self.out_dir);
    }

    pub fn direction(&self) -> Result<Direction, CliError> {
        Direction::parse(&self.direction)
            .ok_or_else(|| CliError::Config(format!("bad direction {:?}", self.direction)))
    }

    pub fn k(&self) -> usize {
        self.retrieval_k.unwrap_or(match self.task {
            Task::Gloss => 10,
            _ => 5,
        })
    }

    pub fn parsed_setting(&self) -> Result<Setting, CliError> {
        Setting::parse(&self.setting, self.task)
    }

    /// Checks the schema version, the setting, the model block and that
    /// every data path the setting needs exists.
    pub fn validate(&self) -> Result<Setting, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.direction()?;
        let setting = self.parsed_setting()?;
        if setting.needs_model() && self.model.is_none() {
            return Err(CliError::Config(format!("setting {} needs a model block", setting.name)));
        }
        if self.task == Task::Judge && self.corruption.is_none() {
            return Err(CliError::Config("judge runs need a corruption setting".into()));
        }
        if self.retrieval_k == Some(0) {
            return Err(CliError::Config("retrieval_k must be positive".into()));
        }
        let mut required: Vec<(&str, Option<&PathBuf>)> = vec![("test", Some(&self.data.test))];
        for c in &setting.components {
            let need = match c {
                Component::Wordlist | Component::W4w => ("wordlist", self.data.wordlist.as_ref()),
                Component::ParaBook | Component::ParaBookIgt => ("para_book", self.data.para_book.as_ref()),
                Component::ParaTrain => ("para_train", self.data.para_train.as_ref()),
                Component::BookAll | Component::BookPara | Component::BookNonPara => {
                    ("book_dir", self.data.book_dir.as_ref())
                }
                Component::Typ => ("grambank_dir", self.data.grambank_dir.as_ref()),
                Component::TopClass => ("igt_train", self.data.igt_train.as_ref()),
                Component::StarShot if self.task == Task::Gloss => ("igt_train", self.data.igt_train.as_ref()),
                Component::StarShot => ("para_book", self.data.para_book.as_ref()),
                Component::ZeroShot => continue,
            };
            required.push(need);
        }
        for (name, path) in required {
            match path {
                None => return Err(CliError::Config(format!("setting {} needs data.{name}", setting.name))),
                Some(p) if !p.exists() => {
                    return Err(CliError::Config(format!("data.{name}: {} does not exist", p.display())))
                }
                Some(_) => {}
            }
        }
        Ok(setting)
    }
}
