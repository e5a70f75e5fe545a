//! Replaces aligned proper nouns with random letter strings and measures
//! how often a system copies them through.

use std::collections::HashMap;

use charmt::control_set::{generate_control, proper_noun_rate, ProperNounTags};
use charmt::corpus_io::{parse_alignments, parse_corpus, parse_tags};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");

fn main() -> charmt::Result<()> {
    let corpus = parse_corpus(format!("{DIR}/corpus.jsonl"))?;
    let alignments = parse_alignments(format!("{DIR}/align_src_ref.txt"))?;
    let src_tags = parse_tags(format!("{DIR}/src_tags.txt"))?;
    let ref_tags = parse_tags(format!("{DIR}/ref_tags.txt"))?;
    let tags = ProperNounTags::default();

    println!("proper-noun rate: {:.3}", proper_noun_rate(&corpus, &ref_tags, &tags)?);
    let control = generate_control(&corpus, &alignments, &src_tags, &ref_tags, 42, &tags)?;
    for r in &control.replacements {
        println!("{}: {} -> {}", r.record_id, r.original_src, r.replacement);
    }

    // A system that copies every replacement, and one that keeps the originals.
    let copier: HashMap<String, String> = control
        .corpus
        .records()
        .iter()
        .map(|r| (r.id.clone(), r.reference.clone()))
        .collect();
    let original: HashMap<String, String> = corpus
        .records()
        .iter()
        .map(|r| (r.id.clone(), r.reference.clone()))
        .collect();
    println!("copying accuracy, copier:   {:.2}", control.copying_accuracy(&copier)?);
    println!(
        "copying accuracy, original: {:.2}",
        control.copying_accuracy(&original)?
    );
    Ok(())
}
