//! Alignment-based word accuracy, binned by source/reference orthographic
//! similarity and by reference-word frequency in training data.
//!
//! A pair is an aligned (source word, reference word). A system translates
//! it correctly when some hypothesis word aligned to the same source word
//! equals the reference word after case folding.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus_io::{Alignment, AlignmentSet, Corpus, SentenceRecord};
use crate::error::{Error, Result};
use crate::metrics::orthographic_similarity;
use crate::text::{fold, words};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordPair {
    pub record_id: String,
    pub src_index: usize,
    pub ref_index: usize,
    pub src_word: String,
    pub ref_word: String,
    /// Case-insensitive orthographic similarity of the two words.
    pub similarity: f64,
}

/// One [`WordPair`] per source–reference link.
///
/// Links touching a token that is punctuation only (empty after edge
/// trimming) carry no word and are skipped.
pub fn extract_word_pairs(record: &SentenceRecord, alignment: &Alignment) -> Result<Vec<WordPair>> {
    let src = words(&record.source);
    let reference = words(&record.reference);
    alignment.check_bounds(&record.id, src.len(), reference.len())?;
    Ok(alignment
        .links()
        .iter()
        .filter(|&&(s, r)| !src[s].is_empty() && !reference[r].is_empty())
        .map(|&(s, r)| WordPair {
            record_id: record.id.clone(),
            src_index: s,
            ref_index: r,
            src_word: src[s].to_owned(),
            ref_word: reference[r].to_owned(),
            similarity: orthographic_similarity(&fold(src[s]), &fold(reference[r])),
        })
        .collect())
}

/// Whether any hypothesis word aligned to `pair.src_index` matches the
/// reference word under case folding. Links pointing past the end of the
/// hypothesis are ignored.
pub fn word_correct(pair: &WordPair, hypothesis: &str, alignment: &Alignment) -> bool {
    let hyp = words(hypothesis);
    let want = fold(&pair.ref_word);
    alignment
        .targets_of(pair.src_index)
        .filter_map(|t| hyp.get(t))
        .any(|w| !w.is_empty() && fold(w) == want)
}

/// The two systems being compared; deltas are `first - second`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SystemPair {
    pub first: String,
    pub second: String,
}

impl SystemPair {
    pub fn new(first: impl Into<String>, second: impl Into<String>) -> Self {
        SystemPair {
            first: first.into(),
            second: second.into(),
        }
    }

    /// Parses `"a,b"`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.split(',').map(str::trim).collect::<Vec<_>>()[..] {
            [a, b] if !a.is_empty() && !b.is_empty() => Ok(SystemPair::new(a, b)),
            _ => Err(Error::invalid(format!(
                "expected two comma-separated system names, got {spec:?}"
            ))),
        }
    }
}

impl fmt::Display for SystemPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.first, self.second)
    }
}

/// A word pair with its correctness for both systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluatedPair {
    pub pair: WordPair,
    pub correct: [bool; 2],
}

/// Extracts and evaluates every pair in the corpus, in corpus order.
///
/// `hyp_alignments` holds the source–hypothesis alignments of the first and
/// second system. Every record needs an alignment in all three sets.
pub fn evaluate_pairs(
    corpus: &Corpus,
    src_ref: &AlignmentSet,
    systems: &SystemPair,
    hyp_alignments: [&AlignmentSet; 2],
) -> Result<Vec<EvaluatedPair>> {
    let names = [systems.first.as_str(), systems.second.as_str()];
    let per_record: Vec<Vec<EvaluatedPair>> = corpus
        .records()
        .par_iter()
        .map(|record| {
            let pairs = extract_word_pairs(record, src_ref.require(&record.id)?)?;
            let mut checks = Vec::with_capacity(2);
            for (name, set) in names.iter().zip(hyp_alignments) {
                let hyp = record.hypothesis(name)?;
                let alignment = set.require(&record.id)?;
                alignment.check_bounds(&record.id, words(&record.source).len(), words(hyp).len())?;
                checks.push((hyp, alignment));
            }
            Ok(pairs
                .into_iter()
                .map(|pair| {
                    let correct = [
                        word_correct(&pair, checks[0].0, checks[0].1),
                        word_correct(&pair, checks[1].0, checks[1].1),
                    ];
                    EvaluatedPair { pair, correct }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_record.into_iter().flatten().collect())
}

/// Accuracy of both systems over a subset of pairs. `None` accuracies mark
/// an empty bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyBin {
    pub label: String,
    pub lower: f64,
    /// Exclusive upper edge; `None` when the bin is open-ended or closed at
    /// the top of the range (see `label`).
    pub upper: Option<f64>,
    pub n_pairs: usize,
    pub accuracy: [Option<f64>; 2],
    pub delta: Option<f64>,
}

impl AccuracyBin {
    fn from_pairs<'a>(
        label: String,
        lower: f64,
        upper: Option<f64>,
        pairs: impl Iterator<Item = &'a EvaluatedPair>,
    ) -> Self {
        let mut n = 0usize;
        let mut hits = [0usize; 2];
        for p in pairs {
            n += 1;
            for (h, c) in hits.iter_mut().zip(p.correct) {
                *h += usize::from(c);
            }
        }
        let accuracy = hits.map(|h| (n > 0).then(|| h as f64 / n as f64));
        let delta = match accuracy {
            [Some(a), Some(b)] => Some(a - b),
            _ => None,
        };
        AccuracyBin {
            label,
            lower,
            upper,
            n_pairs: n,
            accuracy,
            delta,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n_pairs == 0
    }
}

/// Disjoint bins whose `n_pairs` partition the binned pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedAccuracy {
    pub bins: Vec<AccuracyBin>,
}

impl BinnedAccuracy {
    pub fn total_pairs(&self) -> usize {
        self.bins.iter().map(|b| b.n_pairs).sum()
    }
}

/// Both framings of accuracy by similarity: cumulative (similarity ≥ τ)
/// and disjoint bins `[τ_i, τ_{i+1})`, with the last bin `[τ_k, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityAccuracy {
    pub cumulative: Vec<AccuracyBin>,
    pub binned: BinnedAccuracy,
}

pub fn default_similarity_thresholds() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn accuracy_by_similarity(pairs: &[EvaluatedPair], thresholds: &[f64]) -> Result<SimilarityAccuracy> {
    if thresholds.is_empty() {
        return Err(Error::invalid("no similarity thresholds"));
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::invalid("similarity thresholds must lie in [0, 1]"));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("similarity thresholds must be strictly ascending"));
    }

    let cumulative = thresholds
        .iter()
        .map(|&t| {
            AccuracyBin::from_pairs(
                format!(">={t}"),
                t,
                None,
                pairs.iter().filter(|p| p.pair.similarity >= t),
            )
        })
        .collect();

    let bins = thresholds
        .iter()
        .enumerate()
        .map(|(i, &lo)| match thresholds.get(i + 1) {
            Some(&hi) => AccuracyBin::from_pairs(
                format!("[{lo},{hi})"),
                lo,
                Some(hi),
                pairs
                    .iter()
                    .filter(|p| p.pair.similarity >= lo && p.pair.similarity < hi),
            ),
            None => AccuracyBin::from_pairs(
                format!("[{lo},1]"),
                lo,
                None,
                pairs.iter().filter(|p| p.pair.similarity >= lo),
            ),
        })
        .collect();

    Ok(SimilarityAccuracy {
        cumulative,
        binned: BinnedAccuracy { bins },
    })
}

/// Case-folded word counts over training-side text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
}

impl FrequencyTable {
    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(&fold(word)).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &HashMap<String, u64> {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Counts words with the same tokenization used for word pairs, so that
/// lookups of reference words line up with the counted forms.
pub fn build_frequency_table<I, S>(lines: I) -> FrequencyTable
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = HashMap::new();
    for line in lines {
        for w in words(line.as_ref()) {
            if !w.is_empty() {
                *counts.entry(fold(w)).or_insert(0) += 1;
            }
        }
    }
    FrequencyTable { counts }
}

pub const DEFAULT_FREQUENCY_BOUNDARIES: [u64; 5] = [0, 1, 10, 100, 1000];

/// Bins pairs by the training frequency of the reference word. Boundaries
/// `b_0 = 0 < b_1 < ... < b_k` give bins `[b_i, b_{i+1})` and `[b_k, ∞)`;
/// unseen words land in the first bin.
pub fn accuracy_by_frequency(
    pairs: &[EvaluatedPair],
    freq: &FrequencyTable,
    boundaries: &[u64],
) -> Result<BinnedAccuracy> {
    if boundaries.first() != Some(&0) {
        return Err(Error::invalid("frequency bin boundaries must start at 0"));
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("frequency bin boundaries must be strictly ascending"));
    }
    let counts: Vec<u64> = pairs.iter().map(|p| freq.count(&p.pair.ref_word)).collect();
    let bins = boundaries
        .iter()
        .enumerate()
        .map(|(i, &lo)| {
            let hi = boundaries.get(i + 1).copied();
            let label = match hi {
                Some(hi) => format!("[{lo},{hi})"),
                None => format!("[{lo},inf)"),
            };
            let members = pairs
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c >= lo && hi.is_none_or(|h| c < h))
                .map(|(p, _)| p);
            AccuracyBin::from_pairs(label, lo as f64, hi.map(|h| h as f64), members)
        })
        .collect();
    Ok(BinnedAccuracy { bins })
}
