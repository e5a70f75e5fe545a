//! Source-vs-target contribution analytics over per-byte gradient norms.
//!
//! Every generated step `t` splits its attribution mass between the source
//! bytes and the already generated prefix. The source share of a step is
//! `Σ src / (Σ src + Σ tgt)`; step 0 has no prefix, so its share is 1.
//! Curves average that share per sentence position; in-word statistics
//! divide it by the curve to factor out the position effect.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus_io::{AlignmentSet, AttributionRecord, Corpus};
use crate::error::{Error, Result};
use crate::text::{fold, tokens};
use crate::word_accuracy::extract_word_pairs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepShare {
    pub source_share: f64,
    pub target_share: f64,
}

pub fn step_shares(record: &AttributionRecord) -> Result<Vec<StepShare>> {
    record
        .steps
        .iter()
        .enumerate()
        .map(|(t, step)| {
            let s = step.source_mass();
            let total = s + step.target_mass();
            if !(total > 0.0) {
                return Err(Error::ZeroStep {
                    id: record.id.clone(),
                    step: t,
                });
            }
            let source_share = s / total;
            Ok(StepShare {
                source_share,
                target_share: 1.0 - source_share,
            })
        })
        .collect()
}

fn source_shares(record: &AttributionRecord) -> Result<Vec<f64>> {
    Ok(step_shares(record)?.into_iter().map(|s| s.source_share).collect())
}

fn all_source_shares(records: &[AttributionRecord]) -> Result<Vec<Vec<f64>>> {
    records.par_iter().map(source_shares).collect()
}

// ---------------------------------------------------------------------------
// Position curves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveOptions {
    /// Width of the trailing rolling mean; 1 disables smoothing.
    pub window: usize,
    /// Leave each record's final (end-of-sentence) step out of the curve.
    pub drop_eos: bool,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            window: 10,
            drop_eos: false,
        }
    }
}

/// Mean source share per sentence position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionCurve {
    pub raw: Vec<f64>,
    /// `raw` smoothed by a trailing rolling mean over positions
    /// `t - window + 1 ..= t`, truncated near the start.
    pub values: Vec<f64>,
    /// Number of records with a step at each position.
    pub support: Vec<usize>,
    pub window: usize,
}

impl PositionCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn value_at(&self, t: usize, id: &str) -> Result<f64> {
        match self.values.get(t) {
            Some(&v) if v > 0.0 => Ok(v),
            Some(_) => Err(Error::invalid(format!("record {id:?}: curve is zero at position {t}"))),
            None => Err(Error::invalid(format!(
                "record {id:?}: position {t} is beyond the curve ({} positions)",
                self.values.len()
            ))),
        }
    }
}

pub fn sentence_position_curve(records: &[AttributionRecord], window: usize) -> Result<PositionCurve> {
    position_curve(
        records,
        &CurveOptions {
            window,
            drop_eos: false,
        },
    )
}

pub fn position_curve(records: &[AttributionRecord], opts: &CurveOptions) -> Result<PositionCurve> {
    if opts.window == 0 {
        return Err(Error::invalid("window must be at least 1"));
    }
    if records.is_empty() {
        return Err(Error::invalid("no attribution records"));
    }
    let shares = all_source_shares(records)?;

    let mut sums: Vec<f64> = Vec::new();
    let mut support: Vec<usize> = Vec::new();
    for s in &shares {
        let used = if opts.drop_eos {
            &s[..s.len().saturating_sub(1)]
        } else {
            &s[..]
        };
        if used.len() > sums.len() {
            sums.resize(used.len(), 0.0);
            support.resize(used.len(), 0);
        }
        for (t, &v) in used.iter().enumerate() {
            sums[t] += v;
            support[t] += 1;
        }
    }
    if sums.is_empty() {
        return Err(Error::invalid("attribution records contain no steps"));
    }

    let raw: Vec<f64> = sums.iter().zip(&support).map(|(&s, &n)| s / n as f64).collect();
    let values = (0..raw.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(opts.window);
            let w = &raw[lo..=t];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    Ok(PositionCurve {
        raw,
        values,
        support,
        window: opts.window,
    })
}

// ---------------------------------------------------------------------------
// Word segmentation over bytes
// ---------------------------------------------------------------------------

/// A maximal run of non-whitespace bytes; `end_byte` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WordSpan {
    pub start_byte: usize,
    pub end_byte: usize,
    pub word_index: usize,
}

impl WordSpan {
    pub fn len(&self) -> usize {
        self.end_byte - self.start_byte + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start_byte..self.end_byte + 1
    }
}

fn is_space_byte(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n')
}

/// Splits on ASCII space, tab and newline. UTF-8 lead and continuation
/// bytes are never whitespace, so multi-byte characters stay whole.
pub fn segment_words(bytes: &[u8]) -> Vec<WordSpan> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, &b) in bytes.iter().enumerate() {
        match (start, is_space_byte(b)) {
            (None, false) => start = Some(i),
            (Some(s), true) => {
                spans.push(WordSpan {
                    start_byte: s,
                    end_byte: i - 1,
                    word_index: spans.len(),
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(WordSpan {
            start_byte: s,
            end_byte: bytes.len() - 1,
            word_index: spans.len(),
        });
    }
    spans
}

// ---------------------------------------------------------------------------
// In-word relative importance
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InWordPoint {
    pub position: usize,
    /// Mean of `share / curve` as a percent; `None` if no byte sits here.
    pub relative_pct: Option<f64>,
    pub count: usize,
}

/// Mean position-normalized source share by byte position inside a word.
///
/// Only bytes inside word spans of the generated text count; whitespace and
/// the end-of-sentence step carry no in-word position.
pub fn in_word_relative_importance(
    records: &[AttributionRecord],
    curve: &PositionCurve,
    max_pos: usize,
) -> Result<Vec<InWordPoint>> {
    let per_record: Vec<Vec<(usize, f64)>> = records
        .par_iter()
        .map(|r| {
            let shares = source_shares(r)?;
            let mut out = Vec::new();
            for span in segment_words(r.text_bytes()) {
                for t in span.range() {
                    let p = t - span.start_byte;
                    if p > max_pos {
                        break;
                    }
                    out.push((p, shares[t] / curve.value_at(t, &r.id)?));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut sums = vec![0.0; max_pos + 1];
    let mut counts = vec![0usize; max_pos + 1];
    for (p, rel) in per_record.into_iter().flatten() {
        sums[p] += rel;
        counts[p] += 1;
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(position, (&s, &n))| InWordPoint {
            position,
            relative_pct: (n > 0).then(|| 100.0 * s / n as f64),
            count: n,
        })
        .collect())
}

/// Mean of `share / curve` over every step of every record, as a percent.
/// Against an unsmoothed curve of the same records this is 100 by
/// construction, which makes it a consistency check on the pipeline.
pub fn overall_relative_importance(records: &[AttributionRecord], curve: &PositionCurve) -> Result<f64> {
    let per_record: Vec<(f64, usize)> = records
        .par_iter()
        .map(|r| {
            let shares = source_shares(r)?;
            let mut sum = 0.0;
            for (t, s) in shares.iter().enumerate() {
                sum += s / curve.value_at(t, &r.id)?;
            }
            Ok((sum, shares.len()))
        })
        .collect::<Result<_>>()?;
    let (sum, n) = per_record.iter().fold((0.0, 0usize), |(a, n), &(s, k)| (a + s, n + k));
    if n == 0 {
        return Err(Error::invalid("attribution records contain no steps"));
    }
    Ok(100.0 * sum / n as f64)
}

// ---------------------------------------------------------------------------
// OSW source importance
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OswConfig {
    /// A pair is an OSW when its similarity is strictly above this.
    pub osw_min: f64,
    /// A pair is a non-OSW when its similarity is strictly below this.
    pub nonosw_max: f64,
    pub curve: CurveOptions,
}

impl Default for OswConfig {
    fn default() -> Self {
        OswConfig {
            osw_min: 0.7,
            nonosw_max: 0.3,
            curve: CurveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupImportance {
    /// Mean position-normalized source share over the words' bytes, percent.
    pub relative_pct: f64,
    /// Mean unnormalized source share over the same bytes.
    pub raw_share: f64,
    /// Mean fraction of a step's source mass that lands on the aligned
    /// source word. Steps with no source mass are left out.
    pub focus: Option<f64>,
    pub n_words: usize,
    pub n_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OswReport {
    /// `None` when no word qualified.
    pub osw: Option<GroupImportance>,
    pub non_osw: Option<GroupImportance>,
    /// Qualifying pairs whose reference word had no surface match in the
    /// generated text.
    pub unmatched: usize,
}

#[derive(Default)]
struct Acc {
    rel: f64,
    raw: f64,
    focus: f64,
    focus_n: usize,
    words: usize,
    bytes: usize,
}

impl Acc {
    fn merge(&mut self, o: &Acc) {
        self.rel += o.rel;
        self.raw += o.raw;
        self.focus += o.focus;
        self.focus_n += o.focus_n;
        self.words += o.words;
        self.bytes += o.bytes;
    }

    fn finish(&self) -> Option<GroupImportance> {
        (self.bytes > 0).then(|| GroupImportance {
            relative_pct: 100.0 * self.rel / self.bytes as f64,
            raw_share: self.raw / self.bytes as f64,
            focus: (self.focus_n > 0).then(|| self.focus / self.focus_n as f64),
            n_words: self.words,
            n_bytes: self.bytes,
        })
    }
}

/// Byte range of each generated word with edge punctuation removed, and its
/// folded surface form. Invalid UTF-8 yields no surface form.
fn generated_words(bytes: &[u8]) -> Vec<(std::ops::Range<usize>, Option<String>)> {
    segment_words(bytes)
        .into_iter()
        .map(|span| match std::str::from_utf8(&bytes[span.range()]) {
            Ok(s) => {
                let tok = tokens(s)[0];
                let start = span.start_byte + tok.core_start;
                let end = span.start_byte + tok.core_end;
                let surface = (start < end).then(|| fold(tok.core()));
                (start..end, surface)
            }
            Err(_) => (span.range(), None),
        })
        .collect()
}

/// Maps reference word indices to generated word indices by walking both
/// in order and taking the next generated word with the same folded form.
fn map_reference_words(reference: &str, generated: &[(std::ops::Range<usize>, Option<String>)]) -> Vec<Option<usize>> {
    let mut cursor = 0;
    tokens(reference)
        .iter()
        .map(|tok| {
            let want = fold(tok.core());
            if want.is_empty() {
                return None;
            }
            let hit = generated[cursor..]
                .iter()
                .position(|(_, s)| s.as_deref() == Some(want.as_str()))
                .map(|k| cursor + k);
            if let Some(j) = hit {
                cursor = j + 1;
            }
            hit
        })
        .collect()
}

/// Offset of the source sentence inside the attributed input bytes: after
/// the prompt when its length is known, else the last occurrence.
fn source_offset(record: &AttributionRecord, source: &str) -> Result<usize> {
    let needle = source.as_bytes();
    let hay = &record.source_bytes;
    if let Some(p) = record.prompt_len {
        if hay[p..].starts_with(needle) {
            return Ok(p);
        }
    }
    if needle.len() <= hay.len() {
        if let Some(i) = (0..=hay.len() - needle.len())
            .rev()
            .find(|&i| &hay[i..i + needle.len()] == needle)
        {
            return Ok(i);
        }
    }
    Err(Error::invalid(format!(
        "record {:?}: source sentence not found in attributed input bytes",
        record.id
    )))
}

/// Source importance of generated words whose aligned source word is
/// orthographically similar to the reference word (OSW) versus words whose
/// pair is dissimilar.
pub fn osw_source_importance(
    records: &[AttributionRecord],
    corpus: &Corpus,
    alignments: &AlignmentSet,
    config: &OswConfig,
) -> Result<OswReport> {
    if !(config.nonosw_max <= config.osw_min) {
        return Err(Error::invalid("nonosw_max must not exceed osw_min"));
    }
    let curve = position_curve(records, &config.curve)?;

    let per_record: Vec<(Acc, Acc, usize)> = records
        .par_iter()
        .map(|r| {
            let sentence = corpus.get(&r.id).ok_or_else(|| Error::Missing {
                what: "corpus record",
                id: r.id.clone(),
            })?;
            let shares = source_shares(r)?;
            let pairs = extract_word_pairs(sentence, alignments.require(&r.id)?)?;
            let generated = generated_words(r.text_bytes());
            let mapping = map_reference_words(&sentence.reference, &generated);
            let base = source_offset(r, &sentence.source)?;
            let src_tokens = tokens(&sentence.source);

            let (mut osw, mut non, mut unmatched) = (Acc::default(), Acc::default(), 0);
            for pair in &pairs {
                let acc = if pair.similarity > config.osw_min {
                    &mut osw
                } else if pair.similarity < config.nonosw_max {
                    &mut non
                } else {
                    continue;
                };
                let Some(j) = mapping[pair.ref_index] else {
                    unmatched += 1;
                    continue;
                };
                let tok = src_tokens[pair.src_index];
                let src_span = base + tok.core_start..base + tok.core_end;
                acc.words += 1;
                for t in generated[j].0.clone() {
                    acc.rel += shares[t] / curve.value_at(t, &r.id)?;
                    acc.raw += shares[t];
                    acc.bytes += 1;
                    let norms = &r.steps[t].src_norms;
                    let mass: f64 = norms.iter().sum();
                    if mass > 0.0 {
                        acc.focus += norms[src_span.clone()].iter().sum::<f64>() / mass;
                        acc.focus_n += 1;
                    }
                }
            }
            Ok((osw, non, unmatched))
        })
        .collect::<Result<_>>()?;

    let (mut osw, mut non, mut unmatched) = (Acc::default(), Acc::default(), 0);
    for (o, n, u) in &per_record {
        osw.merge(o);
        non.merge(n);
        unmatched += u;
    }
    Ok(OswReport {
        osw: osw.finish(),
        non_osw: non.finish(),
        unmatched,
    })
}
