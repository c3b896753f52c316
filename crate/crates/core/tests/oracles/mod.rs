//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's own scoring code.

#![allow(dead_code)]

use rand::Rng;

// ---------------------------------------------------------------------------
// ChrF++ by explicit n-gram lists

const PUNCTS: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

fn words_for_chrf(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in s.split_whitespace() {
        let chars: Vec<char> = w.chars().collect();
        if chars.len() == 1 {
            out.push(w.to_string());
        } else if PUNCTS.contains(chars[chars.len() - 1]) {
            out.push(chars[..chars.len() - 1].iter().collect());
            out.push(chars[chars.len() - 1].to_string());
        } else if PUNCTS.contains(chars[0]) {
            out.push(chars[0].to_string());
            out.push(chars[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

fn grams<T: Clone>(items: &[T], n: usize) -> Vec<Vec<T>> {
    if items.len() < n {
        return Vec::new();
    }
    (0..=items.len() - n).map(|i| items[i..i + n].to_vec()).collect()
}

/// Matches by repeatedly removing a matching reference n-gram.
fn match_lists<T: PartialEq + Clone>(hyp: &[Vec<T>], reference: &[Vec<T>]) -> [u64; 3] {
    let mut pool = reference.to_vec();
    let mut matches = 0;
    for g in hyp {
        if let Some(pos) = pool.iter().position(|r| r == g) {
            pool.remove(pos);
            matches += 1;
        }
    }
    let n_hyp = if reference.is_empty() { 0 } else { hyp.len() as u64 };
    [n_hyp, reference.len() as u64, matches]
}

pub fn brute_chrf_stats(hyp: &str, reference: &str, char_order: usize, word_order: usize) -> Vec<[u64; 3]> {
    let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hw = words_for_chrf(hyp);
    let rw = words_for_chrf(reference);
    let mut out = Vec::new();
    for n in 1..=char_order {
        out.push(match_lists(&grams(&hc, n), &grams(&rc, n)));
    }
    for n in 1..=word_order {
        out.push(match_lists(&grams(&hw, n), &grams(&rw, n)));
    }
    out
}

pub fn brute_chrf_score(stats: &[[u64; 3]], beta: f64) -> f64 {
    let mut ps = Vec::new();
    let mut rs = Vec::new();
    for s in stats {
        if s[0] > 0 && s[1] > 0 {
            ps.push(s[2] as f64 / s[0] as f64);
            rs.push(s[2] as f64 / s[1] as f64);
        }
    }
    if ps.is_empty() {
        return 0.0;
    }
    let p = ps.iter().sum::<f64>() / ps.len() as f64;
    let r = rs.iter().sum::<f64>() / rs.len() as f64;
    if p == 0.0 && r == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    100.0 * (1.0 + b2) * p * r / (b2 * p + r)
}

const WORDS: &[&str] = &[
    "mu", "kiem", "kiemun", "bal", "se", "sor=at", "koraru", "the", "dog", "has", "bitten",
    "fish", "They", "run", "Ma", "emun", "don", "and", "a", "I", "don't", "(yes)", "\"no\"",
    "well,", "ok.", "wow!", "end?", "-", "...", "Kalamang", "tok", "naman", "éa", "ŋa",
];

/// A random sentence of `lo..=hi` words drawn from a small mixed pool.
pub fn random_sentence<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..=hi);
    (0..n)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// IGT scoring by an explicit padded grid

#[derive(Debug, Default, PartialEq, Eq, Clone, Copy)]
pub struct BruteIgt {
    pub morph_match: usize,
    pub morph_total: usize,
    pub word_match: usize,
    pub word_total: usize,
    pub stem: [usize; 3],
    pub gram: [usize; 3],
}

fn brute_is_gram(p: &str) -> bool {
    p.chars().any(|c| c.is_alphabetic())
        && p.chars()
            .all(|c| c.is_ascii_digit() || c == '.' || (c.is_alphabetic() && c.is_uppercase()))
}

fn brute_pieces(word: &str) -> Vec<String> {
    if word.is_empty() {
        return Vec::new();
    }
    word.split(['-', '=']).map(str::to_string).collect()
}

fn bag_prf(pred: &[String], gold: &[String]) -> [usize; 3] {
    let mut pool = gold.to_vec();
    let mut tp = 0;
    for p in pred {
        if let Some(i) = pool.iter().position(|g| g == p) {
            pool.remove(i);
            tp += 1;
        }
    }
    [tp, pred.len() - tp, gold.len() - tp]
}

pub fn brute_igt(pred: &str, gold: &str) -> BruteIgt {
    let pw: Vec<&str> = pred.split_whitespace().collect();
    let gw: Vec<&str> = gold.split_whitespace().collect();
    let n = pw.len().max(gw.len());
    let mut out = BruteIgt {
        word_total: n,
        ..Default::default()
    };
    let (mut ps, mut pg, mut gs, mut gg) = (vec![], vec![], vec![], vec![]);
    for i in 0..n {
        let p = if i < pw.len() { pw[i] } else { "" };
        let g = if i < gw.len() { gw[i] } else { "" };
        if !p.is_empty() && p == g {
            out.word_match += 1;
        }
        let (pp, gp) = (brute_pieces(p), brute_pieces(g));
        let m = pp.len().max(gp.len());
        out.morph_total += m;
        for j in 0..m {
            if j < pp.len() && j < gp.len() && !pp[j].is_empty() && pp[j] == gp[j] {
                out.morph_match += 1;
            }
        }
        for x in pp.into_iter().filter(|x| !x.is_empty()) {
            if brute_is_gram(&x) { pg.push(x) } else { ps.push(x) }
        }
        for x in gp.into_iter().filter(|x| !x.is_empty()) {
            if brute_is_gram(&x) { gg.push(x) } else { gs.push(x) }
        }
    }
    out.stem = bag_prf(&ps, &gs);
    out.gram = bag_prf(&pg, &gg);
    out
}

// ---------------------------------------------------------------------------
// Incomplete beta by tanh-sinh quadrature

/// ∫_0^x t^(a-1) (1-t)^(b-1) dt with the endpoint distances computed
/// without cancellation.
pub fn beta_integral(a: f64, b: f64, x: f64) -> f64 {
    let h = 1.0 / 128.0;
    let half = x / 2.0;
    let pi2 = std::f64::consts::FRAC_PI_2;
    let mut sum = 0.0;
    let kmax = (5.0 / h) as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let s = pi2 * t.sinh();
        // u = half * (1 + tanh s); 1 - u = (1 - x) + half * (1 - tanh s)
        let u = 2.0 * half / (1.0 + (-2.0 * s).exp());
        let one_minus_u = (1.0 - x) + 2.0 * half / (1.0 + (2.0 * s).exp());
        if u <= 0.0 || one_minus_u <= 0.0 {
            continue;
        }
        let w = half * pi2 * t.cosh() / s.cosh().powi(2);
        if w == 0.0 || !w.is_finite() {
            continue;
        }
        let f = ((a - 1.0) * u.ln() + (b - 1.0) * one_minus_u.ln()).exp();
        sum += w * f;
    }
    sum * h
}

pub fn quadrature_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    // split at the midpoint of [0, 1] so both endpoint singularities sit
    // at a node boundary of their own integral
    if x <= 0.5 {
        beta_integral(a, b, x) / (beta_integral(a, b, 0.5) + beta_integral(b, a, 0.5))
    } else {
        1.0 - beta_integral(b, a, 1.0 - x) / (beta_integral(a, b, 0.5) + beta_integral(b, a, 0.5))
    }
}

// ---------------------------------------------------------------------------
// Exact binomial test

/// Two-sided exact binomial p-value for `k` successes in `n` trials at
/// probability 1/2: total mass of outcomes no more likely than `k`.
pub fn binom_two_sided_half(k: u64, n: u64) -> f64 {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_half_n = n as f64 * 0.5f64.ln();
    let ln_pmf = |i: u64| ln_fact[n as usize] - ln_fact[i as usize] - ln_fact[(n - i) as usize] + ln_half_n;
    let observed = ln_pmf(k);
    (0..=n)
        .map(ln_pmf)
        .filter(|&l| l <= observed + 1e-9)
        .map(f64::exp)
        .sum::<f64>()
        .min(1.0)
}
