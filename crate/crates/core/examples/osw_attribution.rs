//! Source importance of orthographically similar words (OSW) against
//! dissimilar ones, from per-step attribution norms.

use charmt::attribution::{osw_source_importance, OswConfig};
use charmt::corpus_io::{load_attributions, parse_alignments, parse_corpus};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");

fn main() -> charmt::Result<()> {
    let records = load_attributions(format!("{DIR}/attributions.jsonl"))?;
    let corpus = parse_corpus(format!("{DIR}/corpus.jsonl"))?;
    let alignments = parse_alignments(format!("{DIR}/align_src_ref.txt"))?;

    let report = osw_source_importance(&records, &corpus, &alignments, &OswConfig::default())?;
    for (name, group) in [("OSW", &report.osw), ("non-OSW", &report.non_osw)] {
        match group {
            Some(g) => println!(
                "{name:<8} {:>2} words, {:>3} bytes: relative {:.2}%, raw share {:.3}, focus {}",
                g.n_words,
                g.n_bytes,
                g.relative_pct,
                g.raw_share,
                g.focus.map_or("-".into(), |f| format!("{f:.3}"))
            ),
            None => println!("{name:<8} no qualifying words"),
        }
    }
    println!("unmatched reference words: {}", report.unmatched);
    Ok(())
}
