//! Drives each queue discipline directly with a synthetic burst, without the
//! network around it, and shows how full each one keeps the queue.
//!
//!     cargo run --release --example aqm_playground -- [buffer_bytes]

use aqmlab::aqm::{build_discipline, DisciplineParams, LinkContext, RedState};
use aqmlab::packet::{Addr, Packet, PacketKind};
use aqmlab::{DisciplineKind, RandomSource, SimTime};

fn packet(id: u64, flow: u32) -> Packet {
    Packet {
        id,
        flow_id: flow,
        kind: PacketKind::Tcp,
        size_bytes: 1000,
        seq: id as i64,
        src: Addr::new(flow, 0),
        dst: Addr::new(flow + 10, 0),
        created_at: SimTime::ZERO,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let buffer: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20_000);
    // Softer thresholds than the scenario defaults so RED and REM have room
    // to act before the buffer fills.
    let mut params = DisciplineParams::default();
    params.red.min_th = 5.0;
    params.red.max_th = 15.0;
    params.red.w_q = 0.02;
    params.rem.gamma = 0.5;
    params.rem.target_backlog = 3.0;
    let link = LinkContext {
        rate_bps: 1e6,
        buffer_bytes: buffer,
        mean_pkt_bytes: 1000,
    };

    println!("3 arrivals per departure for 2 s, 1000-byte packets, {buffer}-byte buffer");
    println!("{:<9} {:>8} {:>8} {:>6} {:>13}", "", "admitted", "dropped", "sent", "mean backlog");
    for kind in DisciplineKind::ALL {
        let mut q = build_discipline(kind, &params, link);
        let mut rng = RandomSource::new(7);
        let (mut admitted, mut dropped, mut sent, mut backlog_sum) = (0, 0, 0, 0);
        let mut id = 0;
        // One departure every 8 ms matches 1 Mbps.
        for tick in 0..250u64 {
            let now = SimTime::from_millis(tick * 8);
            for _ in 0..3 {
                let a = q.enqueue(packet(id, (id % 4) as u32 + 1), now, &mut rng);
                admitted += a.admitted as u64;
                dropped += a.dropped.len();
                id += 1;
            }
            sent += q.dequeue(now).is_some() as u64;
            backlog_sum += q.backlog_packets();
        }
        println!(
            "{:<9} {admitted:>8} {dropped:>8} {sent:>6} {:>13.2}",
            kind.label(),
            backlog_sum as f64 / 250.0
        );
    }

    println!("\nRED drop probability p_a for count = 0:");
    for avg in [4.0, 5.0, 7.5, 10.0, 12.5, 15.0] {
        let st = RedState {
            avg,
            count: 0,
            ..RedState::new(params.red)
        };
        println!("  avg {avg:>5.1} -> {:.4}", st.probabilities().1);
    }
    Ok(())
}
