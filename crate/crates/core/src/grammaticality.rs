//! Word-order corruptions and two-alternative grammaticality judgments.
//!
//! Corruptions act on whitespace tokens of the raw sentence, so punctuation
//! stays attached to its word.

use std::fmt;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::{Direction, Language};
use crate::prompts::{assemble, Prompt, PromptError, PromptSection, SectionKind};

/// Judgment template, version 1. Placeholders: `{language}`, `{a}`, `{b}`.
pub const JUDGMENT_TEMPLATE: &str = include_str!("../assets/judgment_prompt_v1.txt");
pub const JUDGMENT_TEMPLATE_VERSION: u32 = 1;

const MAX_SHUFFLE_DRAWS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammaticalityError {
    #[error("sentence cannot be corrupted: {0}")]
    Uncorruptible(&'static str),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionSetting {
    SwapAdj,
    SwapRan,
    Shuffle,
}

impl CorruptionSetting {
    pub const ALL: [CorruptionSetting; 3] = [
        CorruptionSetting::SwapAdj,
        CorruptionSetting::SwapRan,
        CorruptionSetting::Shuffle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionSetting::SwapAdj => "swap_adj",
            CorruptionSetting::SwapRan => "swap_ran",
            CorruptionSetting::Shuffle => "shuffle",
        }
    }

    pub fn parse(s: &str) -> Option<CorruptionSetting> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for CorruptionSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentedOrder {
    OriginalFirst,
    CorruptedFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    A,
    B,
}

fn check_distinct(words: &[String]) -> Result<(), GrammaticalityError> {
    if words.len() < 2 {
        return Err(GrammaticalityError::Uncorruptible("fewer than two words"));
    }
    if words.iter().all(|w| *w == words[0]) {
        return Err(GrammaticalityError::Uncorruptible("all words identical"));
    }
    Ok(())
}

/// Adjacent index pairs `(i, i + 1)` whose words differ.
pub fn adjacent_candidates(words: &[String]) -> Vec<usize> {
    (0..words.len().saturating_sub(1))
        .filter(|&i| words[i] != words[i + 1])
        .collect()
}

/// Swaps one uniformly chosen unequal adjacent pair; returns the output and
/// the left index.
pub fn swap_adjacent_at<R: Rng + ?Sized>(
    words: &[String],
    rng: &mut R,
) -> Result<(Vec<String>, usize), GrammaticalityError> {
    check_distinct(words)?;
    let candidates = adjacent_candidates(words);
    let i = candidates[rng.random_range(0..candidates.len())];
    let mut out = words.to_vec();
    out.swap(i, i + 1);
    Ok((out, i))
}

pub fn swap_adjacent<R: Rng + ?Sized>(
    words: &[String],
    rng: &mut R,
) -> Result<Vec<String>, GrammaticalityError> {
    swap_adjacent_at(words, rng).map(|(w, _)| w)
}

/// Swaps two uniformly chosen positions `i < j` holding different words
/// (adjacent positions included); returns the output and `(i, j)`.
pub fn swap_random_at<R: Rng + ?Sized>(
    words: &[String],
    rng: &mut R,
) -> Result<(Vec<String>, (usize, usize)), GrammaticalityError> {
    check_distinct(words)?;
    let n = words.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| words[i] != words[j])
        .collect();
    let (i, j) = pairs[rng.random_range(0..pairs.len())];
    let mut out = words.to_vec();
    out.swap(i, j);
    Ok((out, (i, j)))
}

pub fn swap_random<R: Rng + ?Sized>(
    words: &[String],
    rng: &mut R,
) -> Result<Vec<String>, GrammaticalityError> {
    swap_random_at(words, rng).map(|(w, _)| w)
}

/// Uniform permutation, redrawn until it differs from the input.
pub fn shuffle_words<R: Rng + ?Sized>(
    words: &[String],
    rng: &mut R,
) -> Result<Vec<String>, GrammaticalityError> {
    check_distinct(words)?;
    let mut out = words.to_vec();
    for _ in 0..MAX_SHUFFLE_DRAWS {
        out.shuffle(rng);
        if out != words {
            return Ok(out);
        }
    }
    Err(GrammaticalityError::Uncorruptible("shuffle draw limit reached"))
}

pub fn corrupt<R: Rng + ?Sized>(
    words: &[String],
    setting: CorruptionSetting,
    rng: &mut R,
) -> Result<Vec<String>, GrammaticalityError> {
    match setting {
        CorruptionSetting::SwapAdj => swap_adjacent(words, rng),
        CorruptionSetting::SwapRan => swap_random(words, rng),
        CorruptionSetting::Shuffle => shuffle_words(words, rng),
    }
}

/// Per-item seed: the first eight bytes (little-endian) of
/// `sha256(global_seed as LE bytes || item_id)`.
pub fn item_seed(global_seed: u64, item_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update(item_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentItem {
    pub id: String,
    pub setting: CorruptionSetting,
    pub original: Vec<String>,
    pub corrupted: Vec<String>,
    pub presented_order: PresentedOrder,
    pub seed: u64,
}

impl JudgmentItem {
    /// The letter under which the original sentence is shown.
    pub fn correct_answer(&self) -> Answer {
        match self.presented_order {
            PresentedOrder::OriginalFirst => Answer::A,
            PresentedOrder::CorruptedFirst => Answer::B,
        }
    }

    /// Candidate sentences in presentation order (A, B).
    pub fn candidates(&self) -> (String, String) {
        let (o, c) = (self.original.join(" "), self.corrupted.join(" "));
        match self.presented_order {
            PresentedOrder::OriginalFirst => (o, c),
            PresentedOrder::CorruptedFirst => (c, o),
        }
    }
}

/// Corrupts `sentence` and draws the A/B order, both from `seed`.
pub fn build_judgment_item(
    id: &str,
    sentence: &str,
    setting: CorruptionSetting,
    seed: u64,
) -> Result<JudgmentItem, GrammaticalityError> {
    let words: Vec<String> = sentence.split_whitespace().map(str::to_string).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corrupted = corrupt(&words, setting, &mut rng)?;
    let presented_order = if rng.random_bool(0.5) {
        PresentedOrder::OriginalFirst
    } else {
        PresentedOrder::CorruptedFirst
    };
    Ok(JudgmentItem {
        id: id.to_string(),
        setting,
        original: words,
        corrupted,
        presented_order,
        seed,
    })
}

/// Items for every `(id, sentence)` with per-item seeds derived from
/// `global_seed`. Uncorruptible sentences are skipped with a warning.
pub fn build_judgment_set<'a>(
    sentences: impl IntoIterator<Item = (&'a str, &'a str)>,
    setting: CorruptionSetting,
    global_seed: u64,
) -> Vec<JudgmentItem> {
    let mut items = Vec::new();
    for (id, sentence) in sentences {
        match build_judgment_item(id, sentence, setting, item_seed(global_seed, id)) {
            Ok(item) => items.push(item),
            Err(e) => warn!("skipping {id} for {setting}: {e}"),
        }
    }
    items
}

/// Judgment prompt: `data` sections, then the filled template, then
/// `Answer:`.
pub fn build_judgment_prompt(
    item: &JudgmentItem,
    language: &Language,
    setting_label: &str,
    data: Vec<PromptSection>,
) -> Result<Prompt, GrammaticalityError> {
    let (a, b) = item.candidates();
    let text = JUDGMENT_TEMPLATE
        .replace("{language}", &language.name)
        .replace("{a}", &a)
        .replace("{b}", &b);
    let instruction = PromptSection::new(SectionKind::Instruction, text, Vec::new());
    let answer_line = PromptSection::new(SectionKind::SourceLine, "Answer:".into(), Vec::new());
    let direction = Direction::new(language.clone(), Language::from_code(crate::lang::ENGLISH));
    let mut prompt = assemble(setting_label, data, instruction, answer_line, &direction)?;
    prompt.source_id = Some(item.id.clone());
    Ok(prompt)
}

/// First non-whitespace character of the response, if it is A or B in
/// either case.
pub fn parse_answer(response: &str) -> Option<Answer> {
    match response.trim_start().chars().next()? {
        'A' | 'a' => Some(Answer::A),
        'B' | 'b' => Some(Answer::B),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgmentScore {
    pub total: usize,
    pub correct: usize,
    pub unparseable: usize,
    pub accuracy: f64,
}

/// Accuracy over items; unparseable answers count as wrong.
///
/// # Panics
/// If `items` and `responses` differ in length.
pub fn score_judgments<S: AsRef<str>>(items: &[JudgmentItem], responses: &[S]) -> JudgmentScore {
    assert_eq!(items.len(), responses.len(), "one response per item");
    let mut correct = 0;
    let mut unparseable = 0;
    for (item, r) in items.iter().zip(responses) {
        match parse_answer(r.as_ref()) {
            Some(a) if a == item.correct_answer() => correct += 1,
            Some(_) => {}
            None => unparseable += 1,
        }
    }
    let total = items.len();
    JudgmentScore {
        total,
        correct,
        unparseable,
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
    }
}
