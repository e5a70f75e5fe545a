//! Translation-quality metrics, edit distance and paired significance tests.

mod bleu;
mod chrf;
mod levenshtein;
mod ttest;

use serde::Serialize;

pub use bleu::{bleu, bleu_tokenize};
pub use chrf::{chrf, sentence_chrf, ChrfParams};
pub use levenshtein::{levenshtein, orthographic_similarity};
pub use ttest::{paired_t_test, students_t_two_sided_p, TTestResult};

/// A corpus-level score on the 0–100 scale, optionally with per-sentence
/// scores in corpus order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricScore {
    pub value: f64,
    pub per_sentence: Option<Vec<f64>>,
}
