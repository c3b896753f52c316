//! Prompt construction for every setting, and the word-for-word baseline.
//!
//! A [`Prompt`] is an ordered list of sections. Each section keeps the raw
//! data strings it was rendered from, so token counts and vocabulary
//! coverage are taken over the data itself rather than over headers and
//! field labels.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{IgtExample, ParallelPair, TypCode, TypFeature, WordlistEntry};
use crate::lang::{Direction, Language};
use crate::textproc::{count_tokens, lcs_ratio, normalize_type, tokenize_words};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("prompt has more than one instruction section")]
    DuplicateInstruction,
    #[error("prompt has more than one source line")]
    DuplicateSourceLine,
    #[error("pair {0:?} has no gloss")]
    MissingGloss(String),
    #[error("retrieval pool is empty")]
    EmptyPool,
    #[error("{0} is empty")]
    EmptyInput(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Instruction,
    Wordlist,
    Parallel,
    ParallelIgt,
    BookAll,
    BookPara,
    BookNonPara,
    Typology,
    Retrieved,
    SourceLine,
}

impl SectionKind {
    pub fn is_data(self) -> bool {
        !matches!(self, SectionKind::Instruction | SectionKind::SourceLine)
    }

    /// Whether the section's data counts toward prompt tokens.
    pub fn counts_for_tokens(self) -> bool {
        self.is_data()
    }

    /// Whether the section's data counts toward test-set type coverage.
    /// Typological descriptions are excluded: they contain no
    /// target-language data.
    pub fn counts_for_coverage(self) -> bool {
        self.is_data() && self != SectionKind::Typology
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSection {
    pub kind: SectionKind,
    pub text: String,
    /// Raw data strings behind `text`, used for accounting.
    #[serde(skip)]
    pub content: Vec<String>,
}

impl PromptSection {
    pub fn new(kind: SectionKind, text: String, content: Vec<String>) -> Self {
        PromptSection {
            kind,
            text,
            content,
        }
    }

    /// A section whose whole text is data.
    pub fn data(kind: SectionKind, text: impl Into<String>) -> Self {
        let text = text.into();
        PromptSection {
            kind,
            content: vec![text.clone()],
            text,
        }
    }

    pub fn counts_for_coverage(&self) -> bool {
        self.kind.counts_for_coverage()
    }

    pub fn token_count(&self) -> usize {
        if !self.kind.counts_for_tokens() {
            return 0;
        }
        self.content.iter().map(|c| count_tokens(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub setting: String,
    pub direction: Direction,
    pub sections: Vec<PromptSection>,
    pub source_id: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct PromptJson {
    setting: String,
    direction: String,
    sections: Vec<PromptSection>,
    #[serde(default)]
    source_id: Option<String>,
}

impl Serialize for Prompt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PromptJson {
            setting: self.setting.clone(),
            direction: self.direction.label(),
            sections: self.sections.clone(),
            source_id: self.source_id.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Prompt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let json = PromptJson::deserialize(d)?;
        let direction = Direction::parse(&json.direction)
            .ok_or_else(|| serde::de::Error::custom(format!("bad direction {:?}", json.direction)))?;
        Ok(Prompt {
            setting: json.setting,
            direction,
            sections: json.sections,
            source_id: json.source_id,
        })
    }
}

impl Prompt {
    /// Full prompt text: the section texts concatenated.
    pub fn text(&self) -> String {
        self.sections.iter().map(|s| s.text.as_str()).collect()
    }

    /// Hex SHA-256 of the full text.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.text().as_bytes()))
    }

    pub fn data_sections(&self) -> impl Iterator<Item = &PromptSection> {
        self.sections.iter().filter(|s| s.kind.is_data())
    }

    /// Data strings from coverage-counting sections.
    pub fn coverage_content(&self) -> impl Iterator<Item = &str> {
        self.sections
            .iter()
            .filter(|s| s.counts_for_coverage())
            .flat_map(|s| s.content.iter().map(String::as_str))
    }

    /// Splits the full text back into sections using the recorded
    /// section lengths.
    pub fn split_text<'a>(&self, text: &'a str) -> Option<Vec<&'a str>> {
        let mut out = Vec::new();
        let mut rest = text;
        for s in &self.sections {
            if rest.len() < s.text.len() || !rest.is_char_boundary(s.text.len()) {
                return None;
            }
            let (head, tail) = rest.split_at(s.text.len());
            out.push(head);
            rest = tail;
        }
        rest.is_empty().then_some(out)
    }
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Number of word tokens in the prompt's data sections; additive over
/// sections.
pub fn count_prompt_tokens(prompt: &Prompt) -> usize {
    prompt.sections.iter().map(PromptSection::token_count).sum()
}

fn describe(lang: &Language) -> String {
    lang.description
        .clone()
        .unwrap_or_else(|| format!("{} is a low-resource language.", lang.name))
}

/// The translation instruction.
pub fn translation_instruction(direction: &Direction, source: &str) -> PromptSection {
    let xlr = direction.low_resource();
    let text = format!(
        "{desc} Translate the following sentence from {src} to {tgt}: {source}\n\
         Now write the translation. If you are not sure what the translation should be, then give your best guess.\n\
         Do not say that you do not speak {xlr}. Do not say you do not have enough information, you must make a guess. \
         If your translation is wrong, that is fine, but you have to provide a translation.\n\
         Your translation must be on the first line of your response, with no other text before the translation. \
         Only explain your reasoning after providing the translation.\n\
         It is crucial that you only give the translation on the first line of your response, otherwise you will fail. \
         Now write the translation:\n",
        desc = describe(xlr),
        src = direction.source.name,
        tgt = direction.target.name,
        xlr = xlr.name,
    );
    PromptSection::new(SectionKind::Instruction, text, Vec::new())
}

/// Final line: `Kalamang: {source} English:`.
pub fn translation_source_line(direction: &Direction, source: &str) -> PromptSection {
    PromptSection::new(
        SectionKind::SourceLine,
        format!("{}: {} {}:", direction.source.name, source, direction.target.name),
        Vec::new(),
    )
}

/// Recovers the source sentence from a translation prompt's last line.
pub fn parse_source_line(direction: &Direction, prompt_text: &str) -> Option<String> {
    let last = prompt_text.lines().last()?;
    let rest = last.strip_prefix(&format!("{}: ", direction.source.name))?;
    rest.strip_suffix(&format!(" {}:", direction.target.name))
        .map(str::to_string)
}

pub fn build_zero_shot(direction: &Direction, source: &str) -> Result<Prompt, PromptError> {
    compose("0-shot", Vec::new(), direction, source)
}

/// Orders data sections before the instruction and source line.
///
/// Adds the translation instruction when `sections` has none, and always
/// appends the translation source line.
pub fn compose(
    setting: &str,
    sections: Vec<PromptSection>,
    direction: &Direction,
    source: &str,
) -> Result<Prompt, PromptError> {
    if source.trim().is_empty() {
        return Err(PromptError::EmptyInput("source sentence"));
    }
    let (instructions, data): (Vec<_>, Vec<_>) = sections
        .into_iter()
        .partition(|s| s.kind == SectionKind::Instruction);
    if data.iter().any(|s| s.kind == SectionKind::SourceLine) {
        return Err(PromptError::DuplicateSourceLine);
    }
    let instruction = match instructions.len() {
        0 => translation_instruction(direction, source),
        1 => instructions.into_iter().next().unwrap(),
        _ => return Err(PromptError::DuplicateInstruction),
    };
    assemble(
        setting,
        data,
        instruction,
        translation_source_line(direction, source),
        direction,
    )
}

/// Builds a prompt from data sections plus an explicit instruction and
/// source line.
pub fn assemble(
    setting: &str,
    data: Vec<PromptSection>,
    instruction: PromptSection,
    source_line: PromptSection,
    direction: &Direction,
) -> Result<Prompt, PromptError> {
    if data.iter().any(|s| s.kind == SectionKind::Instruction) {
        return Err(PromptError::DuplicateInstruction);
    }
    if data.iter().any(|s| s.kind == SectionKind::SourceLine) {
        return Err(PromptError::DuplicateSourceLine);
    }
    let mut sections = data;
    sections.push(instruction);
    sections.push(source_line);
    Ok(Prompt {
        setting: setting.to_string(),
        direction: direction.clone(),
        sections,
        source_id: None,
    })
}

fn help(what: &str) -> String {
    format!("To help with the translation, here {what}:\n")
}

pub fn build_wordlist_prompt(
    entries: &[WordlistEntry],
    xlr: &Language,
    hrl: &Language,
) -> Result<PromptSection, PromptError> {
    if entries.is_empty() {
        return Err(PromptError::EmptyInput("wordlist"));
    }
    let mut text = help(&format!("is a {}-{} word list", xlr.name, hrl.name));
    let mut content = Vec::with_capacity(entries.len() * 2);
    for e in entries {
        text.push_str(&format!(
            "{}: {} = {}: {}\n",
            xlr.name, e.headword, hrl.name, e.translation
        ));
        content.push(e.headword.clone());
        content.push(e.translation.clone());
    }
    text.push('\n');
    Ok(PromptSection::new(SectionKind::Wordlist, text, content))
}

fn pair_sides<'a>(pair: &'a ParallelPair, direction: &Direction) -> (&'a str, &'a str) {
    if direction.source.is_english() {
        (&pair.target, &pair.source)
    } else {
        (&pair.source, &pair.target)
    }
}

/// Parallel sentences, plain or with interlinear glosses.
///
/// Plain pairs are written in translation direction; glossed pairs always
/// lead with the segmented low-resource side.
pub fn build_parallel_prompt(
    pairs: &[ParallelPair],
    with_gloss: bool,
    direction: &Direction,
) -> Result<PromptSection, PromptError> {
    if pairs.is_empty() {
        return Err(PromptError::EmptyInput("parallel data"));
    }
    let (xlr, hrl) = (direction.low_resource(), direction.high_resource());
    let mut text = help(&format!(
        "are some example {}-{} parallel sentences",
        xlr.name, hrl.name
    ));
    let mut content = Vec::with_capacity(pairs.len() * 3);
    for pair in pairs {
        if with_gloss {
            let gloss = pair
                .gloss
                .as_deref()
                .ok_or_else(|| PromptError::MissingGloss(pair.id.clone()))?;
            text.push_str(&format!(
                "{}: {} = Interlinear gloss: {} = {} translation: {}\n",
                xlr.name, pair.source, gloss, hrl.name, pair.target
            ));
            content.extend([pair.source.clone(), gloss.to_string(), pair.target.clone()]);
        } else {
            let (s, t) = pair_sides(pair, direction);
            text.push_str(&format!(
                "{}: {}\n{} translation: {}\n",
                direction.source.name, s, direction.target.name, t
            ));
            content.extend([s.to_string(), t.to_string()]);
        }
    }
    text.push('\n');
    let kind = if with_gloss {
        SectionKind::ParallelIgt
    } else {
        SectionKind::Parallel
    };
    Ok(PromptSection::new(kind, text, content))
}

/// The grammar book (or one of its subsets) as a single section.
pub fn build_book_prompt(
    book: &str,
    kind: SectionKind,
    xlr: &Language,
    hrl: &Language,
) -> PromptSection {
    let mut text = help(&format!(
        "is the full text of a {}-{} grammar book",
        xlr.name, hrl.name
    ));
    text.push_str("---\n");
    text.push_str(book);
    if !book.ends_with('\n') {
        text.push('\n');
    }
    text.push('\n');
    PromptSection::new(kind, text, vec![book.to_string()])
}

fn implication_phrase(question: &str) -> String {
    let q = question.trim().trim_end_matches('?').trim();
    for prefix in ["Is there an ", "Is there a ", "Are there ", "Is there "] {
        if let Some(rest) = q.strip_prefix(prefix) {
            return rest.to_string();
        }
    }
    format!("the feature \"{}\"", question.trim())
}

fn render_value(out: &mut String, lang: &Language, label: &str, code: TypCode, question: &str) {
    out.push_str(&format!("{} Value: {label}, Code {code}\n", lang.name));
    out.push_str(&format!(
        "{} is coded {code} for this feature, meaning the feature is {label}.\n",
        lang.name
    ));
    let verb = match code {
        TypCode::Known(0) => Some("does not obligatorily encode"),
        TypCode::Known(1) => Some("obligatorily encodes"),
        _ => None,
    };
    if let Some(verb) = verb {
        out.push_str(&format!(
            "This feature indicates {} {verb} the grammatical function of {}.\n",
            lang.name,
            implication_phrase(question)
        ));
    }
    out.push('\n');
}

/// Rule-based rendering of Grambank features for the direction's two
/// languages, in direction order.
///
/// Unknown values print as `unknown, Code ?` without the implication
/// sentence; a language with no row for a feature is left out of that
/// feature's block.
pub fn build_typ_prompt(
    features: &[TypFeature],
    direction: &Direction,
) -> Result<PromptSection, PromptError> {
    if features.is_empty() {
        return Err(PromptError::EmptyInput("feature list"));
    }
    let langs = [&direction.source, &direction.target];
    let (xlr, hrl) = (direction.low_resource(), direction.high_resource());
    let mut text = format!(
        "The following typological features describe the grammatical features of {} and {} \
         including word order, verbal tense, nominal case, and other language universals. \
         Each feature is assigned a value that indicates the extent to which the language \
         tends to exhibit that feature.\n\n",
        xlr.name, hrl.name
    );
    for f in features {
        text.push_str(&format!("Feature ID: {}\n{}\n", f.feature_id, f.question));
        for lang in langs {
            if let Some(v) = f.value_for(&lang.code) {
                render_value(&mut text, lang, &v.value_label, v.code, &f.question);
            }
        }
        text.push_str(
            "---\n\nBelow is a short summary of the grammatical feature, an explanation of the \
             process for assigning the feature's code, and examples of the feature from other \
             languages including interlinear glossed text.\n\n---\n\n",
        );
        text.push_str(&format!("{}\n\n", f.question));
        text.push_str(&format!("Summary\n{}\n\n", f.summary));
        text.push_str(&format!("Procedure\n{}\n\n", f.procedure));
        text.push_str(&format!(
            "This is the end of the summary for feature {}: \"{}\".\n---\n",
            f.feature_id, f.question
        ));
    }
    text.push_str(&format!(
        "This is the end of the typological feature summary for {} and {}.\n\n",
        langs[0].name, langs[1].name
    ));
    Ok(PromptSection::data(SectionKind::Typology, text))
}

/// Which side of a pool pair is compared against the query words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSide {
    Source,
    Target,
}

impl PairSide {
    /// The side written in the direction's source language.
    pub fn for_direction(direction: &Direction) -> PairSide {
        if direction.source.is_english() {
            PairSide::Target
        } else {
            PairSide::Source
        }
    }
}

/// A pool pair retrieved for one query word.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved<'a> {
    pub pair: &'a ParallelPair,
    pub word: String,
    pub score: f64,
}

/// Normalized word types of every pool pair, built once and shared.
#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    pool: Vec<ParallelPair>,
    words: Vec<Vec<String>>,
}

fn query_words(text: &str) -> Vec<String> {
    let mut seen = Vec::new();
    for t in tokenize_words(text).tokens {
        if let Some(w) = normalize_type(&t) {
            if !seen.contains(&w) {
                seen.push(w);
            }
        }
    }
    seen
}

impl RetrievalIndex {
    pub fn new(pool: Vec<ParallelPair>, side: PairSide) -> Result<RetrievalIndex, PromptError> {
        if pool.is_empty() {
            return Err(PromptError::EmptyPool);
        }
        let words = pool
            .iter()
            .map(|p| {
                query_words(match side {
                    PairSide::Source => &p.source,
                    PairSide::Target => &p.target,
                })
            })
            .collect();
        Ok(RetrievalIndex { pool, words })
    }

    pub fn pool(&self) -> &[ParallelPair] {
        &self.pool
    }

    /// Best LCS ratio between `word` and any word of pair `i`.
    pub fn score(&self, word: &str, i: usize) -> f64 {
        self.words[i]
            .iter()
            .map(|w| lcs_ratio(word, w))
            .fold(0.0, f64::max)
    }

    /// Top `k` pairs per query word, in sentence order, without repeats.
    pub fn retrieve(&self, sentence: &str, k: usize) -> Vec<Retrieved<'_>> {
        let mut out: Vec<Retrieved<'_>> = Vec::new();
        for word in query_words(sentence) {
            let mut scored: Vec<(usize, f64)> =
                (0..self.pool.len()).map(|i| (i, self.score(&word, i))).collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            for &(i, score) in scored.iter().take(k) {
                let pair = &self.pool[i];
                if out.iter().any(|r| r.pair.id == pair.id) {
                    continue;
                }
                out.push(Retrieved {
                    pair,
                    word: word.clone(),
                    score,
                });
            }
        }
        out
    }
}

/// Retrieves `k` examples per source word (the 5*-shot setting uses k = 5).
pub fn retrieve_star_shot<'a>(
    index: &'a RetrievalIndex,
    source: &str,
    k: usize,
) -> Result<Vec<Retrieved<'a>>, PromptError> {
    if k == 0 {
        return Err(PromptError::EmptyInput("k"));
    }
    Ok(index.retrieve(source, k))
}

pub fn build_retrieved_prompt(
    retrieved: &[Retrieved<'_>],
    direction: &Direction,
) -> PromptSection {
    let (xlr, hrl) = (direction.low_resource(), direction.high_resource());
    let mut text = String::new();
    let mut content = Vec::new();
    for r in retrieved {
        let (s, t) = pair_sides(r.pair, direction);
        text.push_str(&help(&format!(
            "is a translated sentence with words similar to {} in a list of translated {}-{} reference sentences",
            r.word, xlr.name, hrl.name
        )));
        text.push_str(&format!(
            "{}: {}\n{} translation: {}\n\n",
            direction.source.name, s, direction.target.name, t
        ));
        content.extend([s.to_string(), t.to_string()]);
    }
    PromptSection::new(SectionKind::Retrieved, text, content)
}

/// Retrieved IGT examples in the glossed triple format.
pub fn build_retrieved_igt_prompt(
    retrieved: &[&IgtExample],
    xlr: &Language,
    hrl: &Language,
) -> PromptSection {
    let mut text = format!(
        "To help with the glossing, here are some similar {}-{} glossed examples:\n",
        xlr.name, hrl.name
    );
    let mut content = Vec::new();
    for ex in retrieved {
        let (t, g) = (ex.transcription_line(), ex.gloss_line());
        text.push_str(&format!(
            "{}: {t} = Interlinear gloss: {g} = {} translation: {}\n",
            xlr.name, hrl.name, ex.translation
        ));
        content.extend([t, g, ex.translation.clone()]);
    }
    text.push('\n');
    PromptSection::new(SectionKind::Retrieved, text, content)
}

/// Which wordlist column the source tokens are looked up in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookupSide {
    Headword,
    Translation,
}

impl LookupSide {
    pub fn for_direction(direction: &Direction) -> LookupSide {
        if direction.source.is_english() {
            LookupSide::Translation
        } else {
            LookupSide::Headword
        }
    }
}

/// Casefolded lookup keys for [`w4w_translate`].
#[derive(Debug, Clone)]
pub struct W4wLexicon {
    entries: Vec<(String, String)>,
}

impl W4wLexicon {
    pub fn new(wordlist: &[WordlistEntry], side: LookupSide) -> W4wLexicon {
        W4wLexicon {
            entries: wordlist
                .iter()
                .map(|e| match side {
                    LookupSide::Headword => (e.headword.to_lowercase(), e.translation.clone()),
                    LookupSide::Translation => (e.translation.to_lowercase(), e.headword.clone()),
                })
                .collect(),
        }
    }

    /// Exact casefolded match, else the best fuzzy match at or above
    /// `threshold` (first entry wins ties), else `None`.
    pub fn lookup(&self, token: &str, threshold: f64) -> Option<&str> {
        let key = token.to_lowercase();
        if let Some((_, out)) = self.entries.iter().find(|(k, _)| *k == key) {
            return Some(out);
        }
        let mut best: Option<(f64, &str)> = None;
        for (k, out) in &self.entries {
            let r = lcs_ratio(&key, k);
            if r >= threshold && best.is_none_or(|(b, _)| r > b) {
                best = Some((r, out));
            }
        }
        best.map(|(_, out)| out)
    }

    pub fn translate(&self, sentence: &str, threshold: f64) -> String {
        tokenize_words(sentence)
            .tokens
            .iter()
            .map(|t| self.lookup(t, threshold).unwrap_or(t).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub const W4W_DEFAULT_THRESHOLD: f64 = 0.5;

/// Word-for-word translation by exact-then-fuzzy headword lookup; tokens
/// with no match are copied through.
pub fn w4w_translate(sentence: &str, wordlist: &[WordlistEntry], threshold: f64) -> String {
    W4wLexicon::new(wordlist, LookupSide::Headword).translate(sentence, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FeatureValue;

    fn kgv_eng() -> Direction {
        Direction::parse("kgv-eng").unwrap()
    }

    fn entry(h: &str, t: &str) -> WordlistEntry {
        WordlistEntry {
            headword: h.into(),
            translation: t.into(),
        }
    }

    #[test]
    fn zero_shot_text() {
        let p = build_zero_shot(&kgv_eng(), "Mu kiem.").unwrap();
        let text = p.text();
        assert!(text.starts_with("Kalamang is a language spoken on the Karas Islands in West Papua. Translate the following sentence from Kalamang to English: Mu kiem.\n"));
        assert!(text.contains("Do not say that you do not speak Kalamang."));
        assert!(text.ends_with("Now write the translation:\nKalamang: Mu kiem. English:"));
        assert_eq!(count_prompt_tokens(&p), 0);
        assert_eq!(p.sections.len(), 2);

        let rev = build_zero_shot(&kgv_eng().reversed(), "They run.").unwrap().text();
        assert!(rev.contains("from English to Kalamang: They run."));
        assert!(rev.starts_with("Kalamang is a language"));
        assert!(rev.ends_with("English: They run. Kalamang:"));
        assert_eq!(
            parse_source_line(&kgv_eng().reversed(), &rev).as_deref(),
            Some("They run.")
        );
    }

    #[test]
    fn wordlist_lines() {
        let d = kgv_eng();
        let s = build_wordlist_prompt(&[entry("a'a", "yes")], d.low_resource(), d.high_resource()).unwrap();
        assert_eq!(
            s.text,
            "To help with the translation, here is a Kalamang-English word list:\nKalamang: a'a = English: yes\n\n"
        );
        assert_eq!(s.token_count(), 2);
        assert!(build_wordlist_prompt(&[], d.low_resource(), d.high_resource()).is_err());
    }

    #[test]
    fn parallel_formats() {
        let d = kgv_eng();
        let plain = ParallelPair::new("1", "Mu kiem.", "They run.").unwrap();
        let s = build_parallel_prompt(std::slice::from_ref(&plain), false, &d).unwrap();
        assert!(s.text.ends_with("Kalamang: Mu kiem.\nEnglish translation: They run.\n\n"));
        let glossed = ParallelPair::new("2", "mu kiem", "They run.").unwrap().with_gloss("3PL run");
        let s = build_parallel_prompt(&[glossed], true, &d).unwrap();
        assert!(s.text.contains(
            "Kalamang: mu kiem = Interlinear gloss: 3PL run = English translation: They run.\n"
        ));
        assert_eq!(
            build_parallel_prompt(&[plain], true, &d),
            Err(PromptError::MissingGloss("1".into()))
        );
    }

    #[test]
    fn compose_orders_sections() {
        let d = kgv_eng();
        let typ = PromptSection::data(SectionKind::Typology, "typ");
        let book = PromptSection::data(SectionKind::BookPara, "a b c");
        let p = compose("typ+book_para", vec![typ, book.clone()], &d, "Mu kiem.").unwrap();
        let kinds: Vec<_> = p.sections.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [
                SectionKind::Typology,
                SectionKind::BookPara,
                SectionKind::Instruction,
                SectionKind::SourceLine
            ]
        );
        let p = compose("book_para", vec![book.clone()], &d, "x").unwrap();
        assert_eq!(p.sections.len(), 3);
        assert_eq!(count_prompt_tokens(&p), 3);
        let text = p.text();
        assert_eq!(p.split_text(&text).unwrap().concat(), text);
        let two = vec![translation_instruction(&d, "x"), translation_instruction(&d, "x")];
        assert_eq!(compose("s", two, &d, "x"), Err(PromptError::DuplicateInstruction));
    }

    #[test]
    fn prompt_json() {
        let p = compose("book_para", vec![PromptSection::data(SectionKind::BookPara, "a")], &kgv_eng(), "x").unwrap();
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(json["setting"], "book_para");
        assert_eq!(json["direction"], "kgv-eng");
        assert_eq!(json["sections"][0]["kind"], "book_para");
        let back: Prompt = serde_json::from_value(json).unwrap();
        assert_eq!(back.text(), p.text());
    }

    fn gb020() -> TypFeature {
        TypFeature {
            feature_id: "GB020".into(),
            question: "Are there definite or specific articles?".into(),
            values: vec![
                FeatureValue {
                    language: "kgv".into(),
                    value_label: "absent".into(),
                    code: TypCode::Known(0),
                },
                FeatureValue {
                    language: "eng".into(),
                    value_label: "present".into(),
                    code: TypCode::Known(1),
                },
            ],
            summary: "An article is a marker.".into(),
            procedure: "1. Code 1 if ...".into(),
        }
    }

    #[test]
    fn typology_block() {
        let s = build_typ_prompt(&[gb020()], &kgv_eng()).unwrap();
        assert!(s.text.contains("Feature ID: GB020\nAre there definite or specific articles?\nKalamang Value: absent, Code 0\n"));
        assert!(s.text.contains("Kalamang is coded 0 for this feature, meaning the feature is absent."));
        assert!(s.text.contains("This feature indicates Kalamang does not obligatorily encode the grammatical function of definite or specific articles."));
        assert!(s.text.contains("English Value: present, Code 1\n"));
        assert!(s.text.contains("This feature indicates English obligatorily encodes"));
        assert!(s.text.contains("This is the end of the summary for feature GB020: \"Are there definite or specific articles?\".\n---\n"));
        assert!(s.text.ends_with("This is the end of the typological feature summary for Kalamang and English.\n\n"));
        assert!(!s.counts_for_coverage());
        assert!(s.token_count() > 0);

        let mut f = gb020();
        f.values[0].code = TypCode::Unknown;
        f.values[0].value_label = "unknown".into();
        f.values.pop();
        let s = build_typ_prompt(&[f], &kgv_eng()).unwrap();
        assert!(s.text.contains("Kalamang Value: unknown, Code ?\n"));
        assert!(!s.text.contains("This feature indicates"));
        assert!(!s.text.contains("English Value"));
    }

    #[test]
    fn retrieval_exact_match_first() {
        let pool = vec![
            ParallelPair::new("a", "bal se", "x").unwrap(),
            ParallelPair::new("b", "mu kiem", "y").unwrap(),
            ParallelPair::new("c", "kiemun", "z").unwrap(),
        ];
        let index = RetrievalIndex::new(pool, PairSide::Source).unwrap();
        let got = retrieve_star_shot(&index, "kiem", 1).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].pair.id, "b");
        assert_eq!(got[0].score, 1.0);
        let all = retrieve_star_shot(&index, "kiem", 10).unwrap();
        let ids: Vec<_> = all.iter().map(|r| r.pair.id.as_str()).collect();
        assert_eq!(ids, ["b", "c", "a"]);
        assert!(RetrievalIndex::new(Vec::new(), PairSide::Source).is_err());
    }

    #[test]
    fn retrieved_framing() {
        let pair = ParallelPair::new("a", "Mu kiem.", "They run.").unwrap();
        let r = Retrieved {
            pair: &pair,
            word: "kiem".into(),
            score: 1.0,
        };
        let s = build_retrieved_prompt(&[r], &kgv_eng());
        assert_eq!(
            s.text,
            "To help with the translation, here is a translated sentence with words similar to kiem in a list of translated Kalamang-English reference sentences:\n\
             Kalamang: Mu kiem.\nEnglish translation: They run.\n\n"
        );
    }

    #[test]
    fn w4w() {
        let list = [entry("a'a", "yes"), entry("kiem", "run"), entry("mu", "they")];
        assert_eq!(w4w_translate("a'a", &list, 0.5), "yes");
        assert_eq!(w4w_translate("Mu kiemun xyz", &list, 0.5), "they run xyz");
        assert_eq!(w4w_translate("kiemun", &list, 0.9), "kiemun");
        let rev = W4wLexicon::new(&list, LookupSide::Translation);
        assert_eq!(rev.translate("They run.", 0.5), "mu kiem .");
    }
}
