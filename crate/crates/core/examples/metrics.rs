//! Corpus chrF++, chrF and BLEU for each system in the sample corpus, plus
//! a few orthographic similarities.

use charmt::corpus_io::parse_corpus;
use charmt::metrics::{bleu, chrf, levenshtein, orthographic_similarity, ChrfParams};

fn main() -> charmt::Result<()> {
    let corpus = parse_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample/corpus.jsonl"))?;
    let refs = corpus.references();
    for system in corpus.systems() {
        let hyps = corpus.hypotheses(system)?;
        let chrfpp = chrf(&hyps, &refs, &ChrfParams::default(), true)?;
        let plain = chrf(&hyps, &refs, &ChrfParams::chrf(), false)?;
        let b = bleu(&hyps, &refs)?;
        println!(
            "{system:>5}  chrF++ {:6.2}  chrF {:6.2}  BLEU {:6.2}",
            chrfpp.value, plain.value, b.value
        );
        for (r, s) in corpus.records().iter().zip(chrfpp.per_sentence.unwrap_or_default()) {
            println!("       {:<3} {s:6.2}", r.id);
        }
    }

    for (a, b) in [
        ("kitten", "sitting"),
        ("Musik", "Music"),
        ("Katze", "cat"),
        ("Berlin", "Berlin"),
    ] {
        println!(
            "{a:>7} / {b:<7} distance {}  similarity {:.2}",
            levenshtein(a, b),
            orthographic_similarity(a, b)
        );
    }
    Ok(())
}
