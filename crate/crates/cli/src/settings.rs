//! Prompt-setting registry and per-example prompt construction.
//!
//! A setting name is one or more components joined by `+`, e.g.
//! `book_all+wordlist+para_train`. Data sections appear in name order.

use std::path::Path;

use bookprobe::corpus::{
    load_grambank, load_parallel_jsonl, load_wordlist, IgtExample, ParallelPair, Subset, TypFeature,
    WordlistEntry,
};
use bookprobe::glossing::{IgtRetriever, TopClassModel};
use bookprobe::lang::{Direction, Language};
use bookprobe::prompts::{
    build_book_prompt, build_parallel_prompt, build_retrieved_igt_prompt, build_retrieved_prompt, build_typ_prompt,
    build_wordlist_prompt, retrieve_star_shot, PairSide, PromptSection, RetrievalIndex, SectionKind,
    W4wLexicon,
};

use crate::config::{ExperimentConfig, Task};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    ZeroShot,
    W4w,
    TopClass,
    Wordlist,
    ParaBook,
    ParaBookIgt,
    ParaTrain,
    BookAll,
    BookPara,
    BookNonPara,
    Typ,
    StarShot,
}

impl Component {
    pub const ALL: [Component; 12] = [
        Component::ZeroShot,
        Component::W4w,
        Component::TopClass,
        Component::Wordlist,
        Component::ParaBook,
        Component::ParaBookIgt,
        Component::ParaTrain,
        Component::BookAll,
        Component::BookPara,
        Component::BookNonPara,
        Component::Typ,
        Component::StarShot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::ZeroShot => "0-shot",
            Component::W4w => "w4w",
            Component::TopClass => "top-class",
            Component::Wordlist => "wordlist",
            Component::ParaBook => "para_book",
            Component::ParaBookIgt => "para_book_igt",
            Component::ParaTrain => "para_train",
            Component::BookAll => "book_all",
            Component::BookPara => "book_para",
            Component::BookNonPara => "book_non_para",
            Component::Typ => "typ",
            Component::StarShot => "star_shot",
        }
    }

    pub fn parse(s: &str) -> Option<Component> {
        Component::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Settings computed without a model.
    pub fn is_local(self) -> bool {
        matches!(self, Component::W4w | Component::TopClass)
    }

    fn tasks(self) -> &'static [Task] {
        match self {
            Component::W4w | Component::Wordlist | Component::ParaTrain => &[Task::Translate],
            Component::TopClass => &[Task::Gloss],
            Component::ParaBook | Component::ParaBookIgt => &[Task::Translate, Task::Judge],
            Component::BookAll | Component::BookPara | Component::BookNonPara => {
                &[Task::Translate, Task::Judge]
            }
            Component::ZeroShot | Component::Typ | Component::StarShot => {
                &[Task::Translate, Task::Judge, Task::Gloss]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Setting {
    pub name: String,
    pub components: Vec<Component>,
}

impl Setting {
    pub fn parse(name: &str, task: Task) -> Result<Setting, CliError> {
        let mut components = Vec::new();
        for part in name.split('+') {
            let c = Component::parse(part.trim()).ok_or_else(|| {
                let known: Vec<&str> = Component::ALL.iter().map(|c| c.name()).collect();
                CliError::Config(format!("unknown setting component {part:?} (known: {})", known.join(", ")))
            })?;
            if components.contains(&c) {
                return Err(CliError::Config(format!("{part} repeated in setting {name:?}")));
            }
            if !c.tasks().contains(&task) {
                return Err(CliError::Config(format!("{part} is not a {task:?} setting")));
            }
            components.push(c);
        }
        if components.len() > 1 && components.iter().any(|c| c.is_local() || *c == Component::ZeroShot) {
            return Err(CliError::Config(format!(
                "{name:?}: 0-shot, w4w and top-class cannot be combined"
            )));
        }
        Ok(Setting {
            name: name.to_string(),
            components,
        })
    }

    pub fn is_local(&self) -> bool {
        self.components.iter().any(|c| c.is_local())
    }

    pub fn needs_model(&self) -> bool {
        !self.is_local()
    }

    pub fn is_retrieval(&self) -> bool {
        self.components.contains(&Component::StarShot)
    }
}

/// Loaded data and prebuilt static sections for one run.
pub struct PromptFactory {
    setting: Setting,
    task: Task,
    direction: Direction,
    k: usize,
    /// Static sections, with `None` in the slot of the per-example one.
    slots: Vec<Option<PromptSection>>,
    retrieval: Option<RetrievalIndex>,
    igt_pool: Vec<IgtExample>,
    pub lexicon: Option<W4wLexicon>,
    pub topclass: Option<TopClassModel>,
}

fn read_book(dir: &Path, subset: Subset) -> Result<String, CliError> {
    let path = dir.join(subset.file_name());
    std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))
}

impl PromptFactory {
    /// Direction the prompts are written for: the configured direction for
    /// translation, low-resource to English otherwise.
    pub fn prompt_direction(cfg: &ExperimentConfig) -> Result<Direction, CliError> {
        let d = cfg.direction()?;
        Ok(match cfg.task {
            Task::Translate => d,
            Task::Judge | Task::Gloss => Direction::new(d.low_resource().clone(), d.high_resource().clone()),
        })
    }

    pub fn new(cfg: &ExperimentConfig, setting: &Setting) -> Result<PromptFactory, CliError> {
        let direction = Self::prompt_direction(cfg)?;
        let (xlr, hrl) = (direction.low_resource().clone(), direction.high_resource().clone());
        let data = &cfg.data;
        let path = |p: &Option<std::path::PathBuf>, what: &str| {
            p.clone().ok_or_else(|| CliError::Config(format!("missing data.{what}")))
        };
        let mut wordlist: Option<Vec<WordlistEntry>> = None;
        let mut para_book: Option<Vec<ParallelPair>> = None;
        let load_wordlist_once = |wl: &mut Option<Vec<WordlistEntry>>| -> Result<Vec<WordlistEntry>, CliError> {
            if wl.is_none() {
                *wl = Some(load_wordlist(&path(&data.wordlist, "wordlist")?)?);
            }
            Ok(wl.clone().unwrap())
        };
        let load_para_book = |pb: &mut Option<Vec<ParallelPair>>| -> Result<Vec<ParallelPair>, CliError> {
            if pb.is_none() {
                *pb = Some(load_parallel_jsonl(&path(&data.para_book, "para_book")?)?);
            }
            Ok(pb.clone().unwrap())
        };

        let mut factory = PromptFactory {
            setting: setting.clone(),
            task: cfg.task,
            direction: direction.clone(),
            k: cfg.k(),
            slots: Vec::new(),
            retrieval: None,
            igt_pool: Vec::new(),
            lexicon: None,
            topclass: None,
        };
        for c in &setting.components {
            let section = match c {
                Component::ZeroShot => continue,
                Component::W4w => {
                    let entries = load_wordlist_once(&mut wordlist)?;
                    factory.lexicon = Some(W4wLexicon::new(
                        &entries,
                        bookprobe::prompts::LookupSide::for_direction(&direction),
                    ));
                    continue;
                }
                Component::TopClass => {
                    let train = load_igt(&path(&data.igt_train, "igt_train")?, &xlr)?;
                    factory.topclass = Some(bookprobe::glossing::train_topclass(&train));
                    continue;
                }
                Component::Wordlist => {
                    build_wordlist_prompt(&load_wordlist_once(&mut wordlist)?, &xlr, &hrl)?
                }
                Component::ParaBook => build_parallel_prompt(&load_para_book(&mut para_book)?, false, &direction)?,
                Component::ParaBookIgt => build_parallel_prompt(&load_para_book(&mut para_book)?, true, &direction)?,
                Component::ParaTrain => {
                    let pairs = load_parallel_jsonl(&path(&data.para_train, "para_train")?)?;
                    build_parallel_prompt(&pairs, false, &direction)?
                }
                Component::BookAll | Component::BookPara | Component::BookNonPara => {
                    let (subset, kind) = match c {
                        Component::BookAll => (Subset::All, SectionKind::BookAll),
                        Component::BookPara => (Subset::Para, SectionKind::BookPara),
                        _ => (Subset::NonPara, SectionKind::BookNonPara),
                    };
                    let text = read_book(&path(&data.book_dir, "book_dir")?, subset)?;
                    build_book_prompt(&text, kind, &xlr, &hrl)
                }
                Component::Typ => {
                    let features: Vec<TypFeature> = load_grambank(
                        &path(&data.grambank_dir, "grambank_dir")?,
                        &[direction.source.code.as_str(), direction.target.code.as_str()],
                    )?;
                    build_typ_prompt(&features, &direction)?
                }
                Component::StarShot => {
                    if cfg.task == Task::Gloss {
                        factory.igt_pool = load_igt(&path(&data.igt_train, "igt_train")?, &xlr)?;
                    } else {
                        let side = match cfg.task {
                            Task::Translate => PairSide::for_direction(&direction),
                            _ => PairSide::Source,
                        };
                        factory.retrieval = Some(RetrievalIndex::new(load_para_book(&mut para_book)?, side)?);
                    }
                    factory.slots.push(None);
                    continue;
                }
            };
            factory.slots.push(Some(section));
        }
        Ok(factory)
    }

    pub fn setting(&self) -> &Setting {
        &self.setting
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    /// Data sections for a sentence pair (translation and judgment).
    /// `query` is the text retrieval matches against.
    pub fn sections_for(&self, query: &str) -> Result<Vec<PromptSection>, CliError> {
        self.fill(|| {
            let index = self.retrieval.as_ref().expect("retrieval index loaded");
            let retrieved = retrieve_star_shot(index, query, self.k)?;
            Ok(build_retrieved_prompt(&retrieved, &self.direction))
        })
    }

    /// Data sections for a glossing example, retrieving from the IGT pool.
    pub fn gloss_sections_for(&self, example: &IgtExample, retriever: Option<&IgtRetriever<'_>>) -> Result<Vec<PromptSection>, CliError> {
        self.fill(|| {
            let r = retriever.expect("IGT retriever built");
            Ok(r.section(example, self.k, self.direction.low_resource()))
        })
    }

    /// Data sections with the retrieval slot holding the whole retrieval
    /// pool; coverage of a retrieval setting is measured on these.
    pub fn pool_sections(&self) -> Result<Vec<PromptSection>, CliError> {
        self.fill(|| match &self.retrieval {
            Some(index) => Ok(build_parallel_prompt(index.pool(), false, &self.direction)?),
            None => {
                let pool: Vec<&IgtExample> = self.igt_pool.iter().collect();
                Ok(build_retrieved_igt_prompt(&pool, self.direction.low_resource(), self.direction.high_resource()))
            }
        })
    }

    fn fill(&self, dynamic: impl Fn() -> Result<PromptSection, CliError>) -> Result<Vec<PromptSection>, CliError> {
        self.slots
            .iter()
            .map(|s| match s {
                Some(section) => Ok(section.clone()),
                None => dynamic(),
            })
            .collect()
    }

    pub fn igt_pool(&self) -> &[IgtExample] {
        &self.igt_pool
    }

    pub fn task(&self) -> Task {
        self.task
    }
}

pub fn load_igt(path: &Path, xlr: &Language) -> Result<Vec<IgtExample>, CliError> {
    Ok(bookprobe::corpus::load_igt_jsonl(path, &xlr.code, bookprobe::lang::ENGLISH)?)
}
