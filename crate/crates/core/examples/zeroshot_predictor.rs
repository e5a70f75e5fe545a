//! Predicts which of two systems wins per language from whether the
//! language (or a relative in the same script) was in pretraining, and
//! reports how often the prediction holds.

use charmt::corpus_io::{load_language_metadata, load_score_table};
use charmt::word_accuracy::SystemPair;
use charmt::zeroshot::{evaluate_predictor, PredictorRule};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn main() -> charmt::Result<()> {
    let scores = load_score_table(format!("{DIR}/zeroshot_deu-eng_large_10k.csv"))?;
    let metadata = load_language_metadata(format!("{DIR}/flores200_metadata.tsv"))?;
    let systems = SystemPair::new("byt5", "mt5");

    for rule in [PredictorRule::Full, PredictorRule::Presence] {
        let report = evaluate_predictor(&scores, &metadata, rule, &systems, "10k")?;
        println!(
            "{rule:?}: {}/{} correct = {:.3} ({} ties, {} skipped)",
            report.correct,
            report.evaluated(),
            report.accuracy,
            report.ties(),
            report.skipped.len()
        );
        let misses: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| !r.correct)
            .map(|r| r.code.as_str())
            .collect();
        println!("  misses: {}", misses.join(" "));
    }
    Ok(())
}
