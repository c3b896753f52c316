//! Word tokenization, vocabulary types and LCS similarity.
//!
//! [`tokenize_words`] follows the NLTK Treebank word tokenizer rule by rule,
//! applied per sentence. Sentence boundaries come from a small rule-based
//! splitter rather than a trained Punkt model.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use fancy_regex::Regex;

struct Rule {
    re: Regex,
    rep: &'static str,
}

fn rule(pattern: &str, rep: &'static str) -> Rule {
    Rule {
        re: Regex::new(pattern).expect("tokenizer pattern"),
        rep,
    }
}

// Python's `$` also matches before a final newline.
const END: &str = r"(?=\n?\z)";

static STARTING_QUOTES: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    vec![
        rule(r"([«“‘„]|[`]+)", " ${1} "),
        rule(r#"^""#, "``"),
        rule(r"(``)", " ${1} "),
        rule(r#"([ \(\[{<])("|'{2})"#, "${1} `` "),
        rule(r"(?i)(?<!\w)(')(?!(?:re|ve|ll|m|t|s|d|n)\b)(?=\w)", "${1} "),
    ]
});

static PUNCTUATION: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    vec![
        rule(&format!(r#"([^\.])(\.)([\]\)}}>"'»”’ ]*)\s*{END}"#), "${1} ${2} ${3} "),
        rule(r"([:,])([^\d])", " ${1} ${2}"),
        rule(&format!(r"([:,]){END}"), " ${1} "),
        rule(r"\.{2,}", " ${0} "),
        rule(r"[;@#$%&]", " ${0} "),
        rule(r"[\u{2012}-\u{2015}]", " ${0} "),
        rule(&format!(r#"([^\.])(\.)([\]\)}}>"']*)\s*{END}"#), "${1} ${2}${3} "),
        rule(r"[?!]", " ${0} "),
        rule(r"([^'])' ", "${1} ' "),
        rule(r"[*]", " ${0} "),
        rule(r"[\]\[\(\)\{\}<>]", " ${0} "),
        rule(r"--", " -- "),
    ]
});

static ENDING_QUOTES: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    vec![
        rule(r"([»”’])", " ${1} "),
        rule(r"''", " '' "),
        rule(r#"""#, " '' "),
        rule(r"\s+", " "),
        rule(r"([^' ])('[sS]|'[mM]|'[dD]|') ", "${1} ${2} "),
        rule(r"([^' ])('ll|'LL|'re|'RE|'ve|'VE|n't|N'T) ", "${1} ${2} "),
    ]
});

static CONTRACTIONS: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    [
        r"(?i)\b(can)(not)\b",
        r"(?i)\b(d)('ye)\b",
        r"(?i)\b(gim)(me)\b",
        r"(?i)\b(gon)(na)\b",
        r"(?i)\b(got)(ta)\b",
        r"(?i)\b(lem)(me)\b",
        r"(?i)\b(more)('n)\b",
        r"(?i)\b(wan)(na)(?=\s)",
        r"(?i) ('t)(is)\b",
        r"(?i) ('t)(was)\b",
    ]
    .into_iter()
    .map(|p| rule(p, " ${1} ${2} "))
    .collect()
});

fn apply(rules: &[Rule], mut text: String) -> String {
    for r in rules {
        if let std::borrow::Cow::Owned(s) = r.re.replace_all(&text, r.rep) {
            text = s;
        }
    }
    text
}

/// Treebank word tokenization of a single sentence.
pub fn tokenize_sentence(sentence: &str) -> Vec<String> {
    let text = apply(&STARTING_QUOTES, sentence.to_string());
    let text = apply(&PUNCTUATION, text);
    let text = apply(&ENDING_QUOTES, format!(" {text} "));
    let text = apply(&CONTRACTIONS, text);
    text.split_whitespace().map(str::to_string).collect()
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "etc", "cf", "al", "fig", "figs",
    "eq", "no", "nos", "p", "pp", "vol", "ed", "eds", "ch", "sec", "approx", "ca", "viz", "resp",
];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '”', '’', '»'];

fn ends_sentence(token: &str, next: Option<&str>) -> bool {
    let core = token.trim_end_matches(CLOSERS);
    let Some(last) = core.chars().last() else {
        return false;
    };
    if last == '?' || last == '!' {
        return true;
    }
    if last != '.' {
        return false;
    }
    let next_lower = next
        .and_then(|n| n.chars().find(|c| c.is_alphanumeric()))
        .is_some_and(char::is_lowercase);
    if core.ends_with("..") {
        return !next_lower;
    }
    let word = core.trim_end_matches('.').trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) || word.contains('.') {
        return false;
    }
    let mut chars = word.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        // initials such as "J."
        if c.is_alphabetic() {
            return false;
        }
    }
    if word.chars().all(|c| c.is_ascii_digit()) && !word.is_empty() {
        // ordinals and list numbers only break before an uppercase word
        return !next_lower;
    }
    true
}

/// Splits running text into sentences on sentence-final punctuation.
///
/// Every returned slice is a trimmed substring of `text`.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut words: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                words.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        words.push((s, text.len()));
    }
    let mut sentences = Vec::new();
    let mut sent_start = None;
    for (k, &(s, e)) in words.iter().enumerate() {
        let first = *sent_start.get_or_insert(s);
        let next = words.get(k + 1).map(|&(ns, ne)| &text[ns..ne]);
        if next.is_none() || ends_sentence(&text[s..e], next) {
            sentences.push(&text[first..e]);
            sent_start = None;
        }
    }
    sentences
}

/// Tokens of a text together with the text they came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream<'a> {
    pub tokens: Vec<String>,
    pub origin: &'a str,
}

impl TokenStream<'_> {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Treebank-style word tokenization of arbitrary text.
pub fn tokenize_words(text: &str) -> TokenStream<'_> {
    TokenStream {
        tokens: split_sentences(text)
            .into_iter()
            .flat_map(tokenize_sentence)
            .collect(),
        origin: text,
    }
}

/// Number of word tokens in `text`.
pub fn count_tokens(text: &str) -> usize {
    split_sentences(text)
        .into_iter()
        .map(|s| tokenize_sentence(s).len())
        .sum()
}

/// Casefolds and strips leading/trailing non-alphanumeric characters.
/// Returns `None` when nothing is left.
pub fn normalize_type(token: &str) -> Option<String> {
    let core = token.trim_matches(|c: char| !c.is_alphanumeric());
    if core.is_empty() {
        None
    } else {
        Some(core.to_lowercase())
    }
}

/// Length of the longest common character subsequence.
pub fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in &a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `2 * lcs_len / (|a| + |b|)` in characters; 0 for two empty strings.
pub fn lcs_ratio(a: &str, b: &str) -> f64 {
    let total = a.chars().count() + b.chars().count();
    if total == 0 {
        return 0.0;
    }
    2.0 * lcs_len(a, b) as f64 / total as f64
}

/// A set of normalized word types.
pub type TypeSet = BTreeSet<String>;

pub fn extract_types<S: AsRef<str>>(texts: &[S]) -> TypeSet {
    let mut types = TypeSet::new();
    for text in texts {
        types.extend(
            tokenize_words(text.as_ref())
                .tokens
                .iter()
                .filter_map(|t| normalize_type(t)),
        );
    }
    types
}
