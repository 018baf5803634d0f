//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::time::Instant;

use rayon::prelude::*;

use aqmlab::aqm::{
    red_avg_update, red_drop_decision, rem_mark_prob, rem_price_update, DisciplineKind, DropTail,
    QueueDiscipline, RedParams, RedState, RemParams, Sfq, SfqParams, Verdict,
};
use aqmlab::experiment::{self, Outcome};
use aqmlab::metrics::{compute_loss_ratio, compute_utilization, rank_algorithms, ReportSummary};
use aqmlab::packet::{Addr, Packet, PacketKind};
use aqmlab::trace::{format_record, parse_record, stream_trace, TraceEvent, TraceRecord, TraceWriter};
use aqmlab::{run_scenario, RandomSource, ScenarioConfig, SimTime};

const SEEDS: [u64; 10] = [42, 43, 44, 45, 46, 47, 48, 49, 50, 51];
const REQUIRED_SEEDS: usize = 8;
const SWEEP_RATES: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];

struct Suite {
    failed: usize,
}

impl Suite {
    fn check(&mut self, id: &str, what: &str, ok: bool, detail: impl AsRef<str>) {
        if !ok {
            self.failed += 1;
        }
        println!(
            "{id:<5} {:<4} {what} -- {}",
            if ok { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
    }
}

fn round_to(x: f64, digits: i32) -> f64 {
    let k = 10f64.powi(digits);
    (x * k).round() / k
}

fn ac1(s: &mut Suite) {
    let rows = [(37157u64, 151u64, 0.4064, 59.45), (42554, 56, 0.1316, 68.08), (49117, 66, 0.1344, 78.58)];
    let mut loss_ok = true;
    let mut util_ok = true;
    let mut detail = Vec::new();
    for (sent, lost, loss, util) in rows {
        let l = compute_loss_ratio(sent, lost).unwrap();
        let u = compute_utilization(sent, 2000, 10e6, 100.0);
        loss_ok &= round_to(l, 4) == loss;
        util_ok &= (u - util).abs() <= 0.01 + 1e-9;
        detail.push(format!("{sent}/{lost}: {:.4}% loss, {u:.4}% util", l));
    }
    s.check("AC1", "loss ratio to 4 decimals", loss_ok, detail.join("; "));
    s.check("AC1", "utilization within 0.01 pp", util_ok, "59.45 / 68.08 / 78.58 expected");
}

struct SeedRun {
    seed: u64,
    red: Outcome,
    sfq: Outcome,
    rem: Outcome,
}

fn ac2(s: &mut Suite) {
    let started = Instant::now();
    let jobs: Vec<(u64, DisciplineKind)> = SEEDS
        .iter()
        .flat_map(|&seed| DisciplineKind::COMPARED.iter().map(move |&k| (seed, k)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(seed, k)| {
            experiment::simulate(&ScenarioConfig::default().with_aqm(k).with_seed(seed)).unwrap()
        })
        .collect();
    let elapsed = started.elapsed().as_secs_f64();
    let mut it = outcomes.into_iter();
    let runs: Vec<SeedRun> = SEEDS
        .iter()
        .map(|&seed| SeedRun {
            seed,
            red: it.next().unwrap(),
            sfq: it.next().unwrap(),
            rem: it.next().unwrap(),
        })
        .collect();

    for r in &runs {
        let show = |o: &Outcome| {
            let m = &o.report;
            format!(
                "util {:.2}% loss {:.4}% dmax {:.2}ms",
                m.utilization_pct,
                m.loss_ratio_pct,
                m.delay.all.map_or(f64::NAN, |e| e.max * 1e3)
            )
        };
        println!(
            "      seed {:>2}: RED {} | SFQ {} | REM {}",
            r.seed,
            show(&r.red),
            show(&r.sfq),
            show(&r.rem)
        );
    }

    let count = |pred: &dyn Fn(&SeedRun) -> bool| runs.iter().filter(|r| pred(r)).count();
    let util = |o: &Outcome| o.report.utilization_pct;
    let dmax = |o: &Outcome| o.report.delay.all.map_or(f64::NAN, |e| e.max);
    let dmin = |o: &Outcome| o.report.delay.all.map_or(f64::NAN, |e| e.min);
    let loss = |o: &Outcome| o.report.loss_ratio_pct;

    let n = count(&|r| util(&r.rem) > util(&r.sfq) && util(&r.sfq) > util(&r.red));
    s.check(
        "AC2a",
        "utilization REM > SFQ > RED",
        n >= REQUIRED_SEEDS,
        format!("{n}/10 seeds (need {REQUIRED_SEEDS})"),
    );
    let n = count(&|r| dmax(&r.red) < dmax(&r.sfq) && dmax(&r.sfq) < dmax(&r.rem));
    s.check(
        "AC2b",
        "max delay RED < SFQ < REM",
        n >= REQUIRED_SEEDS,
        format!("{n}/10 seeds (need {REQUIRED_SEEDS})"),
    );
    let n = count(&|r| loss(&r.red) > loss(&r.sfq) && loss(&r.red) > loss(&r.rem));
    s.check(
        "AC2c",
        "RED has the highest loss ratio",
        n >= REQUIRED_SEEDS,
        format!("{n}/10 seeds (need {REQUIRED_SEEDS})"),
    );
    let n = count(&|r| {
        let mins = [dmin(&r.red), dmin(&r.sfq), dmin(&r.rem)];
        let lo = mins.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo > 0.060 && hi - lo <= 0.001
    });
    s.check(
        "AC2d",
        "min delay > 60 ms, minima within 1 ms",
        n >= REQUIRED_SEEDS,
        format!(
            "{n}/10 seeds; seed 42 minima {:.3}/{:.3}/{:.3} ms",
            dmin(&runs[0].red) * 1e3,
            dmin(&runs[0].sfq) * 1e3,
            dmin(&runs[0].rem) * 1e3
        ),
    );
    let n = count(&|r| {
        [&r.red, &r.sfq, &r.rem]
            .iter()
            .all(|o| o.report.queue.max == 2 && o.report.queue.min == 0)
    });
    s.check(
        "AC2e",
        "bottleneck data queue max 2, min 0",
        n >= REQUIRED_SEEDS,
        format!("{n}/10 seeds"),
    );
    s.check(
        "AC2t",
        "30 runs under 60 s",
        elapsed < 60.0,
        format!("{elapsed:.1} s"),
    );
}

fn packet(id: u64, flow: u32, size: u32) -> Packet {
    Packet {
        id,
        flow_id: flow,
        kind: PacketKind::Tcp,
        size_bytes: size,
        seq: id as i64,
        src: Addr::new(flow, 0),
        dst: Addr::new(flow + 10, 0),
        created_at: SimTime::ZERO,
    }
}

fn random_record(rng: &mut RandomSource) -> TraceRecord {
    let events = [TraceEvent::Enqueue, TraceEvent::Dequeue, TraceEvent::Receive, TraceEvent::Drop];
    let kinds = [PacketKind::Tcp, PacketKind::Ack, PacketKind::Cbr];
    let mut pick = |n: u64| rng.draw_u64() % n;
    TraceRecord {
        event: events[pick(4) as usize],
        time: SimTime::from_micros(pick(1_000_000_000_000)),
        from_node: pick(10_000) as u32,
        to_node: pick(10_000) as u32,
        pkt_type: kinds[pick(3) as usize],
        pkt_size: 1 + pick(100_000) as u32,
        fid: pick(100_000) as u32,
        src_addr: Addr::new(pick(1000) as u32, pick(256) as u32),
        dst_addr: Addr::new(pick(1000) as u32, pick(256) as u32),
        seq_num: pick(1 << 40) as i64 - 1,
        pkt_id: pick(u64::MAX),
    }
}

fn ac3(s: &mut Suite) {
    // (a) determinism
    let ok = DisciplineKind::ALL.iter().all(|&k| {
        let cfg = ScenarioConfig::default().with_aqm(k).with_duration_s(10.0);
        let trace = || {
            let mut w = TraceWriter::new(Vec::new());
            run_scenario(&cfg, &mut w).unwrap();
            w.finish().unwrap()
        };
        trace() == trace()
    });
    s.check("AC3a", "identical config+seed gives identical trace bytes", ok, "4 disciplines, 10 s");

    // (b) conservation and (c) backlog bound
    let mut conserved = true;
    let mut bounded = true;
    let mut queues = 0;
    for k in DisciplineKind::ALL {
        for seed in [1, 2] {
            let cfg = ScenarioConfig::default().with_aqm(k).with_seed(seed).with_duration_s(20.0);
            let out = experiment::simulate(&cfg).unwrap();
            for q in &out.report.queues {
                queues += 1;
                conserved &= q.conserved();
            }
            bounded &= out.run.links.iter().all(|l| l.max_backlog_bytes <= l.buffer_bytes);
        }
    }
    s.check("AC3b", "+ = - + matched d + final backlog", conserved, format!("{queues} queues"));
    s.check("AC3c", "backlog <= buffer on every link", bounded, "4 disciplines x 2 seeds");

    // (d) round trip
    let mut rng = RandomSource::new(7);
    let bad = (0..10_000)
        .filter(|_| {
            let r = random_record(&mut rng);
            parse_record(&format_record(&r)).ok() != Some(r)
        })
        .count();
    s.check("AC3d", "trace round trip on 10^4 random records", bad == 0, format!("{bad} mismatches"));

    // (e) REM composition
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let k = 1 + (rng.draw_u64() % 8) as usize;
        let phi = 1.0001 + rng.draw_uniform() * 2.0;
        let prices: Vec<f64> = (0..k).map(|_| rng.draw_uniform() * 5000.0).collect();
        let pass: f64 = prices.iter().map(|&p| 1.0 - rem_mark_prob(p, phi)).product();
        worst = worst.max((pass - phi.powf(-prices.iter().sum::<f64>())).abs());
    }
    s.check("AC3e", "REM pass probability = phi^-sum(p)", worst <= 1e-12, format!("max error {worst:.2e}"));

    // (f) SFQ with one bucket against DropTail
    let mut diverged = 0;
    for case in 0..1_000u64 {
        let buffer = 2000 + rng.draw_u64() % 8000;
        let mut sfq = Sfq::new(SfqParams { buckets: 1, ..SfqParams::default() }, buffer);
        let mut fifo = DropTail::new(buffer);
        let mut ra = RandomSource::new(case);
        let mut rb = RandomSource::new(case);
        let len = 1 + rng.draw_u64() % 200;
        let mut same = true;
        for i in 0..len {
            let now = SimTime::from_millis(i);
            if rng.draw_uniform() < 0.6 {
                let flow = 1 + (rng.draw_u64() % 5) as u32;
                let size = [40, 1000, 2000, 3000][(rng.draw_u64() % 4) as usize];
                let a = sfq.enqueue(packet(i, flow, size), now, &mut ra);
                let b = fifo.enqueue(packet(i, flow, size), now, &mut rb);
                same &= a.admitted == b.admitted
                    && a.dropped.iter().map(|p| p.id).eq(b.dropped.iter().map(|p| p.id));
            } else {
                same &= sfq.dequeue(now).map(|p| p.id) == fifo.dequeue(now).map(|p| p.id);
            }
        }
        diverged += !same as usize;
    }
    s.check("AC3f", "SFQ(1 bucket) == DropTail", diverged == 0, format!("{diverged}/1000 sequences diverged"));

    // (g) RED monotone in avg
    let mut monotone = true;
    for count in [-1, 0, 1, 3, 10] {
        let mut prev = (0.0, 0.0);
        for i in 0..=100_000 {
            let st = RedState {
                avg: i as f64 * 3.0 / 100_000.0,
                count,
                ..RedState::new(RedParams::default())
            };
            let p = st.probabilities();
            monotone &= p.0 >= prev.0 && p.1 >= prev.1;
            prev = p;
        }
    }
    s.check("AC3g", "RED drop probability nondecreasing in avg", monotone, "5 counts x 10^5 grid points");
}

fn ac4(s: &mut Suite) {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let avg_ok = close(red_avg_update(0.0, 0.0, 0.002), 0.0)
        && close(red_avg_update(1.0, 1.0, 0.37), 1.0)
        && close(red_avg_update(0.0, 2.0, 0.5), 1.0);
    s.check("AC4", "red_avg_update", avg_ok, "0 / 1.0 / 1.0");

    let params = RedParams { w_q: 0.002, max_p: 0.1, min_th: 1.0, max_th: 2.0 };
    let st = RedState { avg: 1.5, count: 0, ..RedState::new(params) };
    let (p_b, p_a) = st.probabilities();
    let mut rng = RandomSource::new(1);
    let mut below = RedState { avg: 0.5, ..RedState::new(params) };
    let mut above = RedState { avg: 2.0, ..RedState::new(params) };
    let decisions_ok = red_drop_decision(&mut below, &mut rng) == Verdict::Accept
        && below.count == -1
        && red_drop_decision(&mut above, &mut rng) == Verdict::Drop
        && above.count == 0;
    s.check(
        "AC4",
        "RED p_b / p_a",
        close(p_b, 0.05) && close(p_a, 0.05) && decisions_ok,
        format!("p_b {p_b} p_a {p_a}"),
    );

    let rem = RemParams { gamma: 0.001, alpha: 0.1, target_backlog: 0.0, ..RemParams::default() };
    let normalizer = 8.0 * 2000.0 / rem.update_period_s();
    let next = rem_price_update(0.5, &rem, 10.0, 10e6 + 100.0 * normalizer, 10e6, 2000);
    let eq0 = rem_price_update(0.0, &rem, 0.0, 10e6, 10e6, 2000);
    let eq1 = rem_price_update(1.0, &rem, 0.0, 10e6, 10e6, 2000);
    s.check(
        "AC4",
        "rem_price_update",
        close(next, 0.601) && eq0 == 0.0 && close(eq1, 1.0),
        format!("{next}"),
    );
    s.check(
        "AC4",
        "rem_mark_prob",
        rem_mark_prob(0.0, 1.001) == 0.0 && close(rem_mark_prob(1.0, 2.0), 0.5),
        "0 / 0.5",
    );
}

fn ac5(s: &mut Suite) {
    let mut ok_seeds = 0;
    for &seed in &SEEDS {
        let cfg = ScenarioConfig::default().with_aqm(DisciplineKind::Red).with_seed(seed);
        let rows = experiment::sweep(&cfg, &SWEEP_RATES).unwrap();
        let monotone = rows.windows(2).all(|w| w[1].loss_rate_pct <= w[0].loss_rate_pct);
        ok_seeds += monotone as usize;
        println!(
            "      seed {seed}: RED loss % by rate {:?}",
            rows.iter().map(|r| round_to(r.loss_rate_pct, 4)).collect::<Vec<_>>()
        );
    }
    s.check(
        "AC5",
        "RED loss nonincreasing over 5..25 Mbps",
        ok_seeds >= REQUIRED_SEEDS,
        format!("{ok_seeds}/10 seeds (need {REQUIRED_SEEDS})"),
    );
    for k in [DisciplineKind::Sfq, DisciplineKind::Rem] {
        let rows = experiment::sweep(&ScenarioConfig::default().with_aqm(k), &SWEEP_RATES).unwrap();
        let bumps: Vec<f64> = rows
            .windows(2)
            .filter(|w| w[1].loss_rate_pct > w[0].loss_rate_pct)
            .map(|w| w[1].rate_mbps)
            .collect();
        println!(
            "      info: {} loss % by rate {:?}, increases at {:?} Mbps",
            k.label(),
            rows.iter().map(|r| round_to(r.loss_rate_pct, 4)).collect::<Vec<_>>(),
            bumps
        );
    }
}

fn ac6(s: &mut Suite) {
    let published = |label: &str, tput: f64, dmax: f64, sent: u64, lost: u64| ReportSummary {
        sent_packets: sent,
        lost_packets: lost,
        loss_ratio_pct: compute_loss_ratio(sent, lost).unwrap(),
        throughput_max_mbps: tput,
        delay_min_ms: Some(60.03),
        delay_max_ms: Some(dmax),
        queue_max_pkts: 2.0,
        utilization_pct: compute_utilization(sent, 2000, 10e6, 100.0),
        ..ReportSummary::bare(label)
    };
    let table = rank_algorithms(&[
        published("RED", 5.53, 67.25, 37157, 151),
        published("SFQ", 6.64, 90.01, 42554, 56),
        published("REM", 7.51, 92.96, 49117, 66),
    ]);
    let got: Vec<String> = table
        .algorithms
        .iter()
        .zip(&table.grades)
        .map(|(a, g)| format!("{a} {}", g.iter().map(|g| g.letter()).collect::<String>()))
        .collect();
    let want = ["RED AACC", "SFQ BBBA", "REM CCAB"];
    s.check("AC6", "ranking matrix from published values", got == want, got.join(", "));
}

fn ac7(s: &mut Suite) {
    let sample = "\
r 1.3556 3 2 ack 40 ----- 1 3.0 0.0 15 201
+ 1.3556 2 0 ack 40 ----- 1 3.0 0.0 15 201
- 1.3556 2 0 ack 40 ----- 1 3.0 0.0 15 201
r 1.35576 0 2 tcp 1000 ----- 1 0.0 3.0 29 199
+ 1.35576 2 3 tcp 1000 ----- 1 0.0 3.0 29 199
d 1.35576 2 3 tcp 1000 ----- 1 0.0 3.0 29 199
+ 1.356 1 2 cbr 1000 ----- 2 1.0 3.1 157 207
- 1.356 1 2 cbr 1000 ----- 2 1.0 3.1 157 207
";
    let recs: Result<Vec<TraceRecord>, _> = stream_trace(sample.as_bytes()).check_order(true).collect();
    let ok = match &recs {
        Ok(recs) => {
            recs.len() == 8
                && recs[0].event == TraceEvent::Receive
                && recs[0].pkt_type == PacketKind::Ack
                && recs[0].time == SimTime::from_micros(1_355_600)
                && recs[5].event == TraceEvent::Drop
                && recs[6].pkt_type == PacketKind::Cbr
                && recs[6].fid == 2
                && recs[6].seq_num == 157
                && recs[6].pkt_id == 207
                && recs[6].dst_addr == Addr::new(3, 1)
                && sample
                    .lines()
                    .zip(recs)
                    .all(|(line, r)| format_record(r) == line.replace("-----", "-------"))
        }
        Err(_) => false,
    };
    s.check("AC7", "sample trace lines parse and re-emit", ok, "flags normalized to 7 dashes");
}

fn main() {
    let started = Instant::now();
    let mut s = Suite { failed: 0 };
    ac1(&mut s);
    ac2(&mut s);
    ac3(&mut s);
    ac4(&mut s);
    ac5(&mut s);
    ac6(&mut s);
    ac7(&mut s);
    println!(
        "acceptance: {} failing check(s), {:.1} s",
        s.failed,
        started.elapsed().as_secs_f64()
    );
    if s.failed > 0 {
        std::process::exit(1);
    }
}
