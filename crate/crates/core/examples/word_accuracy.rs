//! Word translation accuracy of two systems by source–reference
//! orthographic similarity, in cumulative and disjoint-bin framings.

use charmt::corpus_io::{parse_alignments, parse_corpus};
use charmt::word_accuracy::{accuracy_by_similarity, default_similarity_thresholds, evaluate_pairs, SystemPair};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");

fn main() -> charmt::Result<()> {
    let corpus = parse_corpus(format!("{DIR}/corpus.jsonl"))?;
    let src_ref = parse_alignments(format!("{DIR}/align_src_ref.txt"))?;
    let byt5 = parse_alignments(format!("{DIR}/align_src_byt5.txt"))?;
    let mt5 = parse_alignments(format!("{DIR}/align_src_mt5.txt"))?;
    let systems = SystemPair::new("byt5", "mt5");

    let pairs = evaluate_pairs(&corpus, &src_ref, &systems, [&byt5, &mt5])?;
    for p in pairs.iter().take(5) {
        println!(
            "{:<3} {:>10} -> {:<10} sim {:.2}  correct {:?}",
            p.pair.record_id, p.pair.src_word, p.pair.ref_word, p.pair.similarity, p.correct
        );
    }

    let acc = accuracy_by_similarity(&pairs, &default_similarity_thresholds())?;
    println!("\n{:<10} {:>5} {:>6} {:>6} {:>7}", "bin", "n", "byt5", "mt5", "delta");
    for b in acc.cumulative.iter().chain(&acc.binned.bins).filter(|b| !b.is_empty()) {
        let f = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.3}"));
        println!(
            "{:<10} {:>5} {:>6} {:>6} {:>7}",
            b.label,
            b.n_pairs,
            f(b.accuracy[0]),
            f(b.accuracy[1]),
            f(b.delta)
        );
    }
    Ok(())
}
