//! How much each system gains or loses between a small and a large
//! fine-tuning set, grouped into Latin and non-Latin scripts.

use charmt::corpus_io::load_score_table;
use charmt::zeroshot::{degradation_by_script, ScriptGrouping};

const DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");

fn main() -> charmt::Result<()> {
    let small = load_score_table(format!("{DIR}/scores_small.csv"))?;
    let large = load_score_table(format!("{DIR}/scores_large.csv"))?;
    let groups: ScriptGrouping = "latin:nonlatin".parse()?;

    for system in ["byt5", "mt5"] {
        let report = degradation_by_script(&small, &large, &groups, 25.0, system)?;
        println!("{system} (excluded at or below 25: {})", report.excluded.len());
        for g in report.groups.iter().filter(|g| !g.is_empty()) {
            println!(
                "  {:<9} n={} low {:.2} high {:.2} drop {:+.2} ratio {:.3}",
                g.group,
                g.n,
                g.mean_low.unwrap_or(f64::NAN),
                g.mean_high.unwrap_or(f64::NAN),
                g.mean_drop.unwrap_or(f64::NAN),
                g.mean_ratio.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
