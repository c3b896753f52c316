//! Gloss-line pieces, the Top-Class frequency baseline and gloss prompts.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    split_morphemes, CorpusError, IgtExample, ParallelPair, SegmentedWord, Separator,
};
use crate::lang::{Direction, Language, ENGLISH};
use crate::prompts::{
    assemble, build_retrieved_igt_prompt, PairSide, Prompt, PromptError, PromptSection,
    RetrievalIndex, SectionKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlossCategory {
    Stem,
    Gram,
}

/// True for grammatical labels: letters, digits and periods only, at least
/// one letter, and every letter uppercase (`IAM`, `3SG`, `PL.NL`).
pub fn is_gram(piece: &str) -> bool {
    let mut has_letter = false;
    for c in piece.chars() {
        if c.is_alphabetic() {
            if !c.is_uppercase() {
                return false;
            }
            has_letter = true;
        } else if !(c.is_ascii_digit() || c == '.') {
            return false;
        }
    }
    has_letter
}

pub fn classify(piece: &str) -> GlossCategory {
    if is_gram(piece) {
        GlossCategory::Gram
    } else {
        GlossCategory::Stem
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlossPiece {
    pub text: String,
    pub category: GlossCategory,
}

impl GlossPiece {
    pub fn new(text: &str) -> GlossPiece {
        GlossPiece {
            text: text.to_string(),
            category: classify(text),
        }
    }
}

/// A gloss word split on `-` and `=`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlossWord {
    pub pieces: Vec<GlossPiece>,
    pub separators: Vec<Separator>,
}

impl fmt::Display for GlossWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, "{}", self.separators[i - 1].as_char())?;
            }
            f.write_str(&p.text)?;
        }
        Ok(())
    }
}

pub fn split_gloss_word(word: &str) -> GlossWord {
    let (pieces, separators) = split_morphemes(word);
    GlossWord {
        pieces: pieces.into_iter().map(GlossPiece::new).collect(),
        separators,
    }
}

/// Most frequent training gloss per (casefolded) morpheme.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopClassModel {
    counts: BTreeMap<String, BTreeMap<String, usize>>,
    best: HashMap<String, String>,
    total_morphemes: usize,
}

impl TopClassModel {
    fn from_counts(counts: BTreeMap<String, BTreeMap<String, usize>>) -> TopClassModel {
        let mut best = HashMap::new();
        let mut total = 0;
        for (morpheme, glosses) in &counts {
            total += glosses.values().sum::<usize>();
            // BTreeMap iterates glosses in order, so the first maximum wins ties
            let mut winner: Option<(&String, usize)> = None;
            for (gloss, &n) in glosses {
                if winner.is_none_or(|(_, m)| n > m) {
                    winner = Some((gloss, n));
                }
            }
            if let Some((gloss, _)) = winner {
                best.insert(morpheme.clone(), gloss.clone());
            }
        }
        TopClassModel {
            counts,
            best,
            total_morphemes: total,
        }
    }

    pub fn total_morphemes(&self) -> usize {
        self.total_morphemes
    }

    pub fn lookup(&self, morpheme: &str) -> Option<&str> {
        self.best.get(&morpheme.to_lowercase()).map(String::as_str)
    }

    /// Sorted `morpheme \t gloss \t count` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (morpheme, glosses) in &self.counts {
            for (gloss, n) in glosses {
                out.push_str(&format!("{morpheme}\t{gloss}\t{n}\n"));
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<TopClassModel, CorpusError> {
        let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |message: String| CorpusError::Format {
                line: i + 1,
                message,
            };
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 columns, found {}", cols.len())));
            }
            let n: usize = cols[2]
                .parse()
                .map_err(|_| bad(format!("bad count {:?}", cols[2])))?;
            *counts
                .entry(cols[0].to_string())
                .or_default()
                .entry(cols[1].to_string())
                .or_default() += n;
        }
        Ok(TopClassModel::from_counts(counts))
    }
}

/// Counts morpheme/gloss co-occurrences. Words whose transcription and
/// gloss have different morpheme counts are skipped.
pub fn train_topclass(train: &[IgtExample]) -> TopClassModel {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut skipped = 0;
    for ex in train {
        for (t, g) in ex.transcription.iter().zip(&ex.gloss) {
            if t.morphemes().len() != g.morphemes().len() {
                skipped += 1;
                continue;
            }
            for (m, gl) in t.morphemes().iter().zip(g.morphemes()) {
                *counts
                    .entry(m.to_lowercase())
                    .or_default()
                    .entry(gl.clone())
                    .or_default() += 1;
            }
        }
    }
    if skipped > 0 {
        log::debug!("top-class: skipped {skipped} misaligned words");
    }
    TopClassModel::from_counts(counts)
}

/// Glosses each morpheme with its most frequent training gloss, falling
/// back to the lowercased morpheme; separators follow the transcription.
pub fn predict_topclass(model: &TopClassModel, transcription: &[SegmentedWord]) -> String {
    transcription
        .iter()
        .map(|word| {
            let mut out = String::new();
            for (i, m) in word.morphemes().iter().enumerate() {
                if i > 0 {
                    out.push(word.separators()[i - 1].as_char());
                }
                match model.lookup(m) {
                    Some(g) => out.push_str(g),
                    None => out.push_str(&m.to_lowercase()),
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Instruction for predicting the gloss line of one segmented sentence.
pub fn gloss_instruction(example: &IgtExample, xlr: &Language, hrl: &Language) -> PromptSection {
    let text = format!(
        "Gloss the following segmented {xlr} sentence. Write the interlinear gloss line only, \
         with one gloss word per {xlr} word and one gloss per morpheme, keeping the same \
         morpheme separators (- and =) as the segmentation. \
         Use uppercase labels for grammatical morphemes and {hrl} words for stems.\n\
         If you are not sure what the gloss should be, then give your best guess. \
         Do not say that you do not speak {xlr}; you must make a guess.\n\
         Your gloss must be on the first line of your response, with no other text before it. \
         Only explain your reasoning after providing the gloss.\n\
         {hrl} translation: {translation}\n",
        xlr = xlr.name,
        hrl = hrl.name,
        translation = example.translation,
    );
    PromptSection::new(SectionKind::Instruction, text, Vec::new())
}

/// Gloss-prediction prompt: `data` sections, the instruction with the
/// translation, then `{Xlr}: {segmented transcription} = Interlinear gloss:`.
pub fn build_gloss_prompt(
    example: &IgtExample,
    setting: &str,
    xlr: &Language,
    data: Vec<PromptSection>,
) -> Result<Prompt, PromptError> {
    let hrl = Language::from_code(ENGLISH);
    let instruction = gloss_instruction(example, xlr, &hrl);
    let line = PromptSection::new(
        SectionKind::SourceLine,
        format!("{}: {} = Interlinear gloss:", xlr.name, example.transcription_line()),
        Vec::new(),
    );
    let direction = Direction::new(xlr.clone(), hrl);
    let mut prompt = assemble(setting, data, instruction, line, &direction)?;
    prompt.source_id = Some(example.id.clone());
    Ok(prompt)
}

/// LCS retrieval over a pool of training IGT examples, matched on the
/// segmented transcription.
#[derive(Debug, Clone)]
pub struct IgtRetriever<'a> {
    pool: &'a [IgtExample],
    index: RetrievalIndex,
}

impl<'a> IgtRetriever<'a> {
    pub fn new(pool: &'a [IgtExample]) -> Result<IgtRetriever<'a>, PromptError> {
        let pairs = pool.iter().map(ParallelPair::from_igt).collect();
        Ok(IgtRetriever {
            pool,
            index: RetrievalIndex::new(pairs, PairSide::Source)?,
        })
    }

    /// Top `k` examples per transcription word, deduplicated, excluding the
    /// query example itself.
    pub fn retrieve(&self, example: &IgtExample, k: usize) -> Vec<&'a IgtExample> {
        self.index
            .retrieve(&example.transcription_line(), k)
            .into_iter()
            .filter(|r| r.pair.id != example.id)
            .filter_map(|r| self.pool.iter().find(|e| e.id == r.pair.id))
            .collect()
    }

    /// The 10*-shot data section for `example`.
    pub fn section(&self, example: &IgtExample, k: usize, xlr: &Language) -> PromptSection {
        let hrl = Language::from_code(ENGLISH);
        build_retrieved_igt_prompt(&self.retrieve(example, k), xlr, &hrl)
    }
}
