//! Loss ratio and utilization as the bottleneck rate grows, for every
//! discipline.
//!
//!     cargo run --release --example bandwidth_sweep -- [duration_s]

use aqmlab::experiment;
use aqmlab::{DisciplineKind, ScenarioConfig};

const RATES: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let duration: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(100.0);

    print!("{:<9}", "Mbps");
    for r in RATES {
        print!("{r:>16}");
    }
    println!("\n{:<9}{:>16}", "", "loss% / util%");
    for kind in DisciplineKind::ALL {
        let cfg = ScenarioConfig::default().with_aqm(kind).with_duration_s(duration);
        let rows = experiment::sweep(&cfg, &RATES)?;
        print!("{:<9}", kind.label());
        for row in &rows {
            print!("{:>16}", format!("{:.3} / {:.1}", row.loss_rate_pct, row.utilization_pct));
        }
        println!();
    }
    Ok(())
}
