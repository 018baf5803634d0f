//! Writes a trace for one run to memory, then analyzes it again from the
//! text, the same way `aqmlab analyze` treats a trace file.
//!
//!     cargo run --release --example trace_analysis -- [aqm] [duration_s]

use aqmlab::experiment;
use aqmlab::metrics::AnalysisParams;
use aqmlab::{DisciplineKind, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let aqm: DisciplineKind = args.next().as_deref().unwrap_or("sfq").parse()?;
    let duration: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20.0);

    let cfg = ScenarioConfig::default().with_aqm(aqm).with_duration_s(duration);
    let mut trace = Vec::new();
    let live = experiment::simulate_with_trace(&cfg, &mut trace)?;

    println!("first trace lines:");
    for line in String::from_utf8_lossy(&trace).lines().take(6) {
        println!("  {line}");
    }

    let params = AnalysisParams::for_scenario(&cfg, aqm.label());
    let offline = experiment::analyze_trace(trace.as_slice(), params)?;
    println!(
        "\n{} bytes, {} records, {} drop events",
        trace.len(),
        offline.records,
        offline.drop_events
    );
    print!("{}", offline.summary().render_text());

    // Analysis while simulating and analysis of the written text agree.
    assert_eq!(live.report.summary(), offline.summary());
    println!("\nlive and offline reports match");
    Ok(())
}
