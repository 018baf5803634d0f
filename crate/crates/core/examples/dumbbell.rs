//! Runs the default five-flow dumbbell once and prints per-flow and per-link
//! counters from the simulator itself.
//!
//!     cargo run --release --example dumbbell -- [aqm] [seed] [duration_s]

use aqmlab::experiment;
use aqmlab::{DisciplineKind, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let aqm: DisciplineKind = args.next().as_deref().unwrap_or("red").parse()?;
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let duration: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100.0);

    let cfg = ScenarioConfig::default()
        .with_aqm(aqm)
        .with_seed(seed)
        .with_duration_s(duration);
    let out = experiment::simulate(&cfg)?;
    let run = &out.run;

    println!(
        "{} seed {seed}: {} events, {} trace records",
        aqm.label(),
        run.events,
        run.trace_records
    );
    println!("flow  sent  retx  timeouts  delivered  final_cwnd");
    for f in &run.flows {
        println!(
            "{:>4}  {:>6}  {:>5}  {:>8}  {:>9}  {:>10.2}",
            f.flow_id, f.data_sent, f.retransmissions, f.timeouts, f.delivered, f.final_cwnd
        );
    }
    println!("\nlink      enq    deq   drop  max_backlog/buffer");
    for l in &run.links {
        if l.enqueued == 0 {
            continue;
        }
        println!(
            "{:>2}->{:<2} {:>7} {:>6} {:>6}  {:>6}/{}",
            l.from, l.to, l.enqueued, l.dequeued, l.dropped, l.max_backlog_bytes, l.buffer_bytes
        );
    }
    let r = &out.report;
    println!(
        "\nbottleneck: sent {} lost {} loss {:.4}% utilization {:.2}%",
        r.sent_packets, r.lost_packets, r.loss_ratio_pct, r.utilization_pct
    );
    println!(
        "throughput max {:.2} Mbps, delay min/max {:.2}/{:.2} ms",
        r.throughput.max_mbps,
        r.delay.all.map_or(0.0, |e| e.min * 1e3),
        r.delay.all.map_or(0.0, |e| e.max * 1e3)
    );
    Ok(())
}
