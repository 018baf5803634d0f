//! Runs RED, SFQ and REM on the same scenario and prints the side-by-side
//! metrics table and the A/B/C ranking.
//!
//!     cargo run --release --example compare_disciplines -- [seed]

use aqmlab::experiment;
use aqmlab::{DisciplineKind, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(42);

    let cfg = ScenarioConfig::default().with_seed(seed);
    let outcomes = experiment::run_disciplines(&cfg, &DisciplineKind::COMPARED)?;
    let reports = outcomes.iter().map(|o| o.report.summary()).collect();
    let cmp = experiment::compare(reports)?;
    for w in &cmp.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", cmp.render_text());
    println!();
    print!("{}", cmp.ranking.to_csv_string());
    Ok(())
}
