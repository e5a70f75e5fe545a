//! Source-attribution share by target position, and position-normalized
//! importance by byte position inside words.

use charmt::attribution::{in_word_relative_importance, position_curve, step_shares, CurveOptions};
use charmt::corpus_io::{load_attributions, AttributionRecord};

fn main() -> charmt::Result<()> {
    let records: Vec<AttributionRecord> =
        load_attributions(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample/attributions.jsonl"))?
            .iter()
            .map(AttributionRecord::without_prompt)
            .collect();

    let first = step_shares(&records[0])?;
    println!(
        "{}: first step source share {:.3}, last {:.3}",
        records[0].id,
        first[0].source_share,
        first.last().map_or(0.0, |s| s.source_share)
    );

    let curve = position_curve(
        &records,
        &CurveOptions {
            window: 3,
            drop_eos: true,
        },
    )?;
    println!("\npos   raw    smoothed  support");
    for t in (0..curve.len()).step_by(5) {
        println!(
            "{t:>3}  {:.3}   {:.3}     {}",
            curve.raw[t], curve.values[t], curve.support[t]
        );
    }

    println!("\nin-word byte position -> relative importance (%)");
    for p in in_word_relative_importance(&records, &curve, 6)? {
        if let Some(pct) = p.relative_pct {
            println!("{:>3}  {pct:6.2}  ({} bytes)", p.position, p.count);
        }
    }
    Ok(())
}
