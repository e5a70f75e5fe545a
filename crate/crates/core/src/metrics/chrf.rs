//! chrF and chrF++.
//!
//! Character n-grams are taken over the sentence with all whitespace
//! removed; word n-grams over whitespace tokens with a single trailing (or
//! else leading) ASCII punctuation mark split off, the same token rule the
//! common reference scorer uses. Each order contributes its own F-beta and
//! the score is their plain average; an order with no matches, or with no
//! hypothesis or reference n-grams, contributes 0. The exception is an order
//! that neither side is long enough to have: it counts as a perfect match,
//! so a sentence always scores 100 against itself.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use super::MetricScore;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChrfParams {
    pub char_order: usize,
    /// 0 gives plain chrF.
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
    pub fn chrf() -> Self {
        ChrfParams {
            word_order: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.char_order == 0 {
            return Err(Error::invalid("char_order must be at least 1"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    fn orders(&self) -> usize {
        self.char_order + self.word_order
    }
}

/// (hypothesis n-grams, reference n-grams, matched n-grams)
type OrderStats = [u64; 3];

fn count_ngrams<T: Hash + Eq>(items: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if items.len() >= n {
        for gram in items.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn order_stats<T: Hash + Eq>(hyp: &[T], reference: &[T], n: usize) -> OrderStats {
    let h = count_ngrams(hyp, n);
    let r = count_ngrams(reference, n);
    let matched = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
    [h.values().sum(), r.values().sum(), matched]
}

const PUNCT: &[u8] = b"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

fn is_punct(c: char) -> bool {
    c.is_ascii() && PUNCT.contains(&(c as u8))
}

fn chrf_words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for w in text.split_whitespace() {
        let mut chars = w.chars();
        let first = chars.next();
        let last = chars.next_back();
        match (first, last) {
            (Some(_), Some(l)) if is_punct(l) => {
                let cut = w.len() - l.len_utf8();
                out.extend([&w[..cut], &w[cut..]]);
            }
            (Some(f), Some(_)) if is_punct(f) => {
                let cut = f.len_utf8();
                out.extend([&w[..cut], &w[cut..]]);
            }
            _ => out.push(w),
        }
    }
    out
}

fn sentence_stats(hyp: &str, reference: &str, params: &ChrfParams) -> Vec<OrderStats> {
    let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let mut stats: Vec<OrderStats> = (1..=params.char_order).map(|n| order_stats(&hc, &rc, n)).collect();
    if params.word_order > 0 {
        let hw = chrf_words(hyp);
        let rw = chrf_words(reference);
        stats.extend((1..=params.word_order).map(|n| order_stats(&hw, &rw, n)));
    }
    stats
}

fn f_score(stats: &[OrderStats], beta: f64) -> f64 {
    let b2 = beta * beta;
    let total: f64 = stats
        .iter()
        .map(|&[h, r, m]| {
            if h == 0 && r == 0 {
                return 1.0;
            }
            if m == 0 {
                return 0.0;
            }
            let p = m as f64 / h as f64;
            let rc = m as f64 / r as f64;
            (1.0 + b2) * p * rc / (b2 * p + rc)
        })
        .sum();
    100.0 * total / stats.len() as f64
}

/// Sentence-level score: the corpus formula applied to one pair.
pub fn sentence_chrf(hyp: &str, reference: &str, params: &ChrfParams) -> Result<f64> {
    params.validate()?;
    if reference.trim().is_empty() {
        return Err(Error::invalid("empty reference"));
    }
    Ok(f_score(&sentence_stats(hyp, reference, params), params.beta))
}

/// Corpus chrF(++): n-gram statistics are summed over all sentences before
/// the F-scores are taken.
pub fn chrf<H, R>(hyps: &[H], refs: &[R], params: &ChrfParams, per_sentence: bool) -> Result<MetricScore>
where
    H: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    params.validate()?;
    if hyps.len() != refs.len() {
        return Err(Error::invalid(format!(
            "{} hypotheses for {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if let Some(i) = refs.iter().position(|r| r.as_ref().trim().is_empty()) {
        return Err(Error::invalid(format!("empty reference at index {i}")));
    }

    let stats: Vec<Vec<OrderStats>> = hyps
        .par_iter()
        .zip(refs.par_iter())
        .map(|(h, r)| sentence_stats(h.as_ref(), r.as_ref(), params))
        .collect();

    let mut total = vec![[0u64; 3]; params.orders()];
    for s in &stats {
        for (acc, o) in total.iter_mut().zip(s) {
            for k in 0..3 {
                acc[k] += o[k];
            }
        }
    }

    Ok(MetricScore {
        value: f_score(&total, params.beta),
        per_sentence: per_sentence.then(|| stats.iter().map(|s| f_score(s, params.beta)).collect()),
    })
}
