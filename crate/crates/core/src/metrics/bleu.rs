//! Corpus BLEU: clipped n-gram precision up to order 4, geometric mean,
//! exponential brevity penalty, no smoothing.

use std::collections::HashMap;

use super::MetricScore;
use crate::error::{Error, Result};

const MAX_ORDER: usize = 4;

/// Isolates every ASCII punctuation character as its own token, then splits
/// on whitespace.
pub fn bleu_tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in chunk.char_indices() {
            if c.is_ascii_punctuation() {
                if start < i {
                    out.push(&chunk[start..i]);
                }
                out.push(&chunk[i..i + 1]);
                start = i + 1;
            }
        }
        if start < chunk.len() {
            out.push(&chunk[start..]);
        }
    }
    out
}

fn ngram_counts<'a>(tokens: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, u64> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram.to_vec()).or_insert(0) += 1;
    }
    counts
}

pub fn bleu<H: AsRef<str>, R: AsRef<str>>(hyps: &[H], refs: &[R]) -> Result<MetricScore> {
    if hyps.len() != refs.len() {
        return Err(Error::invalid(format!(
            "{} hypotheses for {} references",
            hyps.len(),
            refs.len()
        )));
    }
    let mut matched = [0u64; MAX_ORDER];
    let mut total = [0u64; MAX_ORDER];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (i, (h, r)) in hyps.iter().zip(refs).enumerate() {
        let ht = bleu_tokenize(h.as_ref());
        let rt = bleu_tokenize(r.as_ref());
        if rt.is_empty() {
            return Err(Error::invalid(format!("empty reference at index {i}")));
        }
        hyp_len += ht.len() as u64;
        ref_len += rt.len() as u64;
        for n in 1..=MAX_ORDER {
            let rc = ngram_counts(&rt, n);
            for (gram, c) in ngram_counts(&ht, n) {
                matched[n - 1] += c.min(rc.get(&gram).copied().unwrap_or(0));
                total[n - 1] += c;
            }
        }
    }

    if matched.contains(&0) {
        return Ok(MetricScore {
            value: 0.0,
            per_sentence: None,
        });
    }
    let log_precision: f64 = matched
        .iter()
        .zip(&total)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / MAX_ORDER as f64;
    let bp = if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    Ok(MetricScore {
        value: 100.0 * bp * log_precision.exp(),
        per_sentence: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_isolates_punctuation() {
        assert_eq!(
            bleu_tokenize("\"Hello,\" she said -- it's 3.5km."),
            ["\"", "Hello", ",", "\"", "she", "said", "-", "-", "it", "'", "s", "3", ".", "5km", "."]
        );
        assert!(bleu_tokenize("  ").is_empty());
    }

    #[test]
    fn identical_is_100() {
        let s = ["the quick brown fox jumps over the lazy dog ."];
        assert!((bleu(&s, &s).unwrap().value - 100.0).abs() < 1e-9);
    }

    #[test]
    fn zero_precision_is_zero() {
        // no 4-gram can match in a 3-token hypothesis
        assert_eq!(bleu(&["a b c"], &["a b c d"]).unwrap().value, 0.0);
        assert_eq!(bleu(&["x y z w"], &["a b c d"]).unwrap().value, 0.0);
    }

    #[test]
    fn brevity_penalty() {
        // all precisions 1, c = 4, r = 5
        let v = bleu(&["a b c d"], &["a b c d e"]).unwrap().value;
        assert!((v - 100.0 * (1.0f64 - 5.0 / 4.0).exp()).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch() {
        assert!(bleu(&["a"], &["a", "b"]).is_err());
    }
}
