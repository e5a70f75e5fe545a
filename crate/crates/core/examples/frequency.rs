//! Word accuracy by how often the reference word occurs in the training
//! targets.

use charmt::corpus_io::{parse_alignments, parse_corpus};
use charmt::word_accuracy::{
    accuracy_by_frequency, build_frequency_table, evaluate_pairs, SystemPair, DEFAULT_FREQUENCY_BOUNDARIES,
};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");

fn main() -> charmt::Result<()> {
    let corpus = parse_corpus(format!("{DIR}/corpus.jsonl"))?;
    let src_ref = parse_alignments(format!("{DIR}/align_src_ref.txt"))?;
    let byt5 = parse_alignments(format!("{DIR}/align_src_byt5.txt"))?;
    let mt5 = parse_alignments(format!("{DIR}/align_src_mt5.txt"))?;
    let pairs = evaluate_pairs(&corpus, &src_ref, &SystemPair::new("byt5", "mt5"), [&byt5, &mt5])?;

    let train = std::fs::read_to_string(format!("{DIR}/train_target.txt")).expect("sample training text");
    let freq = build_frequency_table(train.lines());
    println!(
        "{} distinct training words; \"the\" occurs {} times",
        freq.len(),
        freq.count("The")
    );

    let binned = accuracy_by_frequency(&pairs, &freq, &DEFAULT_FREQUENCY_BOUNDARIES)?;
    for b in &binned.bins {
        match (b.accuracy, b.delta) {
            ([Some(x), Some(y)], Some(d)) => {
                println!(
                    "{:<12} n={:<3} byt5 {x:.3}  mt5 {y:.3}  delta {d:+.3}",
                    b.label, b.n_pairs
                )
            }
            _ => println!("{:<12} n=0", b.label),
        }
    }
    Ok(())
}
