//! Paired t-test on sentence-level chrF++ of two systems.

use charmt::corpus_io::parse_corpus;
use charmt::metrics::{chrf, paired_t_test, ChrfParams};

fn main() -> charmt::Result<()> {
    let corpus = parse_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample/corpus.jsonl"))?;
    let refs = corpus.references();
    let sentence_scores = |system: &str| -> charmt::Result<Vec<f64>> {
        let hyps = corpus.hypotheses(system)?;
        Ok(chrf(&hyps, &refs, &ChrfParams::default(), true)?
            .per_sentence
            .unwrap_or_default())
    };
    let a = sentence_scores("byt5")?;
    let b = sentence_scores("mt5")?;
    let r = paired_t_test(&a, &b)?;
    println!("byt5 mean {:.2}, mt5 mean {:.2}", r.mean_a, r.mean_b);
    println!(
        "t = {:.4}, p = {:.4}, n = {} -> {}",
        r.t,
        r.p,
        r.n,
        if r.significant(0.05) {
            "significant at 0.05"
        } else {
            "not significant at 0.05"
        }
    );
    Ok(())
}
