//! ChrF++ and IGT evaluation metrics.
//!
//! ChrF++ follows the sacreBLEU implementation: character n-grams over the
//! text with whitespace removed, word n-grams over tokens with one leading or
//! trailing punctuation mark split off, and precision/recall averaged over
//! the orders where both sides have n-grams.

use std::collections::HashMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::split_morphemes;
use crate::glossing::{classify, GlossCategory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch {
        hypotheses: usize,
        references: usize,
    },
    #[error("no sentences to score")]
    EmptyCorpus,
    #[error("invalid ChrF parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfParams {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfParams {
    fn default() -> Self {
        ChrfParams {
            char_order: 6,
            word_order: 2,
            beta: 2.0,
        }
    }
}

impl ChrfParams {
    /// Plain ChrF (no word n-grams).
    pub fn chrf() -> Self {
        ChrfParams {
            word_order: 0,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), MetricError> {
        if self.char_order == 0 {
            return Err(MetricError::InvalidParams("char_order must be at least 1"));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(MetricError::InvalidParams("beta must be positive"));
        }
        Ok(())
    }

    fn orders(&self) -> usize {
        self.char_order + self.word_order
    }
}

/// Per-order `[hyp, ref, match]` n-gram counts; summable across sentences.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChrfStats(pub Vec<[u64; 3]>);

impl AddAssign<&ChrfStats> for ChrfStats {
    fn add_assign(&mut self, rhs: &ChrfStats) {
        if self.0.len() < rhs.0.len() {
            self.0.resize(rhs.0.len(), [0; 3]);
        }
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
}

const PUNCTS: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

fn split_punctuation(sentence: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for w in sentence.split_whitespace() {
        let mut chars = w.chars();
        let first = chars.next().expect("non-empty word");
        let Some(last) = chars.next_back() else {
            out.push(w);
            continue;
        };
        if PUNCTS.contains(last) {
            out.push(&w[..w.len() - last.len_utf8()]);
            out.push(&w[w.len() - last.len_utf8()..]);
        } else if PUNCTS.contains(first) {
            out.push(&w[..first.len_utf8()]);
            out.push(&w[first.len_utf8()..]);
        } else {
            out.push(w);
        }
    }
    out
}

fn ngram_counts<T: std::hash::Hash + Eq>(items: impl Iterator<Item = T>) -> HashMap<T, u64> {
    let mut counts = HashMap::new();
    for item in items {
        *counts.entry(item).or_insert(0) += 1;
    }
    counts
}

fn match_stats<T: std::hash::Hash + Eq>(hyp: &HashMap<T, u64>, reference: &HashMap<T, u64>) -> [u64; 3] {
    let hyp_total: u64 = hyp.values().sum();
    let ref_total: u64 = reference.values().sum();
    let matches = hyp
        .iter()
        .map(|(g, &n)| reference.get(g).map_or(0, |&r| n.min(r)))
        .sum();
    [if ref_total > 0 { hyp_total } else { 0 }, ref_total, matches]
}

/// N-gram statistics for one hypothesis/reference pair.
pub fn chrf_stats(hypothesis: &str, reference: &str, params: &ChrfParams) -> ChrfStats {
    let mut stats = Vec::with_capacity(params.orders());
    let hyp_chars: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    let ref_chars: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    for n in 1..=params.char_order {
        let h = ngram_counts(hyp_chars.windows(n));
        let r = ngram_counts(ref_chars.windows(n));
        stats.push(match_stats(&h, &r));
    }
    let hyp_words = split_punctuation(hypothesis);
    let ref_words = split_punctuation(reference);
    for n in 1..=params.word_order {
        let h = ngram_counts(hyp_words.windows(n));
        let r = ngram_counts(ref_words.windows(n));
        stats.push(match_stats(&h, &r));
    }
    ChrfStats(stats)
}

/// F-score in [0, 100] from accumulated statistics.
pub fn chrf_from_stats(stats: &ChrfStats, params: &ChrfParams) -> f64 {
    let factor = params.beta * params.beta;
    let (mut avg_p, mut avg_r, mut effective) = (0.0, 0.0, 0usize);
    for &[n_hyp, n_ref, n_match] in &stats.0 {
        if n_hyp > 0 && n_ref > 0 {
            avg_p += n_match as f64 / n_hyp as f64;
            avg_r += n_match as f64 / n_ref as f64;
            effective += 1;
        }
    }
    if effective == 0 {
        return 0.0;
    }
    avg_p /= effective as f64;
    avg_r /= effective as f64;
    if avg_p + avg_r == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + factor) * avg_p * avg_r / (factor * avg_p + avg_r)
}

/// Sentence-level ChrF++.
pub fn chrf_pp(hypothesis: &str, reference: &str, params: &ChrfParams) -> Result<f64, MetricError> {
    params.validate()?;
    if reference.trim().is_empty() {
        return Err(MetricError::EmptyReference);
    }
    Ok(chrf_from_stats(&chrf_stats(hypothesis, reference, params), params))
}

/// Corpus-level ChrF++: statistics are summed over all pairs before the
/// F-score is taken.
pub fn corpus_chrf_pp<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    params: &ChrfParams,
) -> Result<f64, MetricError> {
    params.validate()?;
    if hypotheses.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut total = ChrfStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        if r.as_ref().trim().is_empty() {
            return Err(MetricError::EmptyReference);
        }
        total += &chrf_stats(h.as_ref(), r.as_ref(), params);
    }
    Ok(chrf_from_stats(&total, params))
}

/// Raw counts behind the four IGT metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IgtScore {
    pub morpheme_matches: usize,
    pub morpheme_total: usize,
    pub word_matches: usize,
    pub word_total: usize,
    pub stem_tp: usize,
    pub stem_fp: usize,
    pub stem_fn: usize,
    pub gram_tp: usize,
    pub gram_fp: usize,
    pub gram_fn: usize,
}

impl Add for IgtScore {
    type Output = IgtScore;
    fn add(self, o: IgtScore) -> IgtScore {
        IgtScore {
            morpheme_matches: self.morpheme_matches + o.morpheme_matches,
            morpheme_total: self.morpheme_total + o.morpheme_total,
            word_matches: self.word_matches + o.word_matches,
            word_total: self.word_total + o.word_total,
            stem_tp: self.stem_tp + o.stem_tp,
            stem_fp: self.stem_fp + o.stem_fp,
            stem_fn: self.stem_fn + o.stem_fn,
            gram_tp: self.gram_tp + o.gram_tp,
            gram_fp: self.gram_fp + o.gram_fp,
            gram_fn: self.gram_fn + o.gram_fn,
        }
    }
}

impl AddAssign for IgtScore {
    fn add_assign(&mut self, o: IgtScore) {
        *self = *self + o;
    }
}

fn pieces(word: &str) -> Vec<&str> {
    if word.is_empty() {
        return Vec::new();
    }
    split_morphemes(word).0.into_iter().map(str::trim).collect()
}

/// Compares a predicted gloss line with the reference.
///
/// Words and, within words, morphemes are aligned by position; the shorter
/// side is padded with empty items that never match.
pub fn score_igt(predicted: &str, reference: &str) -> IgtScore {
    let pred: Vec<&str> = predicted.split_whitespace().collect();
    let gold: Vec<&str> = reference.split_whitespace().collect();
    let mut score = IgtScore::default();
    let mut bags: [HashMap<&str, (usize, usize)>; 2] = Default::default();
    for i in 0..pred.len().max(gold.len()) {
        let p = pred.get(i).copied().unwrap_or("");
        let g = gold.get(i).copied().unwrap_or("");
        score.word_total += 1;
        if !p.is_empty() && p == g {
            score.word_matches += 1;
        }
        let (pp, gp) = (pieces(p), pieces(g));
        score.morpheme_total += pp.len().max(gp.len());
        score.morpheme_matches += pp
            .iter()
            .zip(&gp)
            .filter(|(a, b)| !a.is_empty() && a == b)
            .count();
        for m in pp.into_iter().filter(|m| !m.is_empty()) {
            bags[(classify(m) == GlossCategory::Gram) as usize]
                .entry(m)
                .or_default()
                .0 += 1;
        }
        for m in gp.into_iter().filter(|m| !m.is_empty()) {
            bags[(classify(m) == GlossCategory::Gram) as usize]
                .entry(m)
                .or_default()
                .1 += 1;
        }
    }
    for (cat, bag) in bags.iter().enumerate() {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for &(p, g) in bag.values() {
            let hit = p.min(g);
            tp += hit;
            fp += p - hit;
            fn_ += g - hit;
        }
        if cat == 0 {
            (score.stem_tp, score.stem_fp, score.stem_fn) = (tp, fp, fn_);
        } else {
            (score.gram_tp, score.gram_fp, score.gram_fn) = (tp, fp, fn_);
        }
    }
    score
}

/// Micro-averaged IGT metrics as percentages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IgtSummary {
    pub morph_acc: f64,
    pub word_acc: f64,
    pub stem_f1: f64,
    pub gram_f1: f64,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    pct(2 * tp, 2 * tp + fp + fn_)
}

pub fn aggregate_igt(scores: &[IgtScore]) -> IgtSummary {
    let s = scores.iter().copied().fold(IgtScore::default(), Add::add);
    IgtSummary {
        morph_acc: pct(s.morpheme_matches, s.morpheme_total),
        word_acc: pct(s.word_matches, s.word_total),
        stem_f1: f1(s.stem_tp, s.stem_fp, s.stem_fn),
        gram_f1: f1(s.gram_tp, s.gram_fp, s.gram_fn),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_empty() {
        let p = ChrfParams::default();
        assert_eq!(chrf_pp("They run.", "They run.", &p).unwrap(), 100.0);
        assert_eq!(chrf_pp("", "They run.", &p).unwrap(), 0.0);
        assert_eq!(chrf_pp("x", " ", &p), Err(MetricError::EmptyReference));
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(split_punctuation("(hi) a, .b x"), ["(hi", ")", "a", ",", ".", "b", "x"]);
    }

    #[test]
    fn corpus_mode() {
        let p = ChrfParams::default();
        let single = corpus_chrf_pp(&["mu kiem"], &["mu kiemun"], &p).unwrap();
        assert_eq!(single, chrf_pp("mu kiem", "mu kiemun", &p).unwrap());
        assert_eq!(corpus_chrf_pp(&["a b", "c"], &["a b", "c"], &p).unwrap(), 100.0);
        assert!(matches!(
            corpus_chrf_pp(&["a"], &["a", "b"], &p),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert_eq!(corpus_chrf_pp::<&str, &str>(&[], &[], &p), Err(MetricError::EmptyCorpus));
    }

    #[test]
    fn igt_examples() {
        let s = score_igt("dog IAM fish=OBJ", "dog IAM fish=OBJ");
        assert_eq!((s.morpheme_matches, s.morpheme_total), (4, 4));
        assert_eq!((s.word_matches, s.word_total), (3, 3));

        let s = score_igt("dog IAM fish=SUBJ", "dog IAM fish=OBJ");
        assert_eq!((s.morpheme_matches, s.morpheme_total), (3, 4));
        assert_eq!((s.word_matches, s.word_total), (2, 3));
        assert_eq!((s.gram_tp, s.gram_fp, s.gram_fn), (1, 1, 1));
        assert_eq!(s.stem_tp, 2);

        let s = score_igt("dog", "dog IAM");
        assert_eq!((s.morpheme_matches, s.morpheme_total), (1, 2));
        assert_eq!((s.word_matches, s.word_total), (1, 2));
    }

    #[test]
    fn aggregation() {
        let perfect = aggregate_igt(&[score_igt("dog IAM", "dog IAM")]);
        assert_eq!(
            perfect,
            IgtSummary {
                morph_acc: 100.0,
                word_acc: 100.0,
                stem_f1: 100.0,
                gram_f1: 100.0
            }
        );
        let a = IgtScore {
            morpheme_matches: 3,
            morpheme_total: 4,
            ..Default::default()
        };
        let b = IgtScore {
            morpheme_matches: 1,
            morpheme_total: 2,
            ..Default::default()
        };
        assert!((aggregate_igt(&[a, b]).morph_acc - 400.0 / 6.0).abs() < 1e-9);
        assert_eq!(f1(0, 3, 2), 0.0);
    }
}
