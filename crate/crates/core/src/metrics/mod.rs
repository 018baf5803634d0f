//! Performance measures computed from a trace: loss ratio and utilization
//! at the bottleneck, windowed throughput at the sinks, per-packet end-to-end
//! delay, and queue length over time.
//!
//! Everything works on a single forward pass over [`TraceRecord`]s, so the
//! same code serves a trace file and a live simulation (see [`Analyzer`]).

mod rank;
mod report;

use std::collections::{HashMap, HashSet};

pub use rank::{rank_algorithms, Grade, RankMetric, RankingTable};
pub use report::{render_comparison, ReportSummary};

use crate::error::MetricsError;
use crate::packet::{NodeId, PacketKind};
use crate::sim::SimTime;
use crate::trace::{TraceEvent, TraceRecord, TraceSink};

/// `100 * lost / sent`, or 0 when nothing was sent.
pub fn compute_loss_ratio(sent: u64, lost: u64) -> Result<f64, MetricsError> {
    if lost > sent {
        return Err(MetricsError::LostExceedsSent { sent, lost });
    }
    if sent == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * lost as f64 / sent as f64)
}

/// Share of the link capacity carried by `sent_packets` full-size packets.
pub fn compute_utilization(
    sent_packets: u64,
    packet_size_bytes: u32,
    link_rate_bps: f64,
    duration_s: f64,
) -> f64 {
    if sent_packets == 0 {
        return 0.0;
    }
    100.0 * (sent_packets as f64 * packet_size_bytes as f64 * 8.0) / (link_rate_bps * duration_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
}

impl Extremes {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(Extremes { min: v, max: v }),
            Some(e) => Some(Extremes {
                min: e.min.min(v),
                max: e.max.max(v),
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSeries {
    pub window_s: f64,
    /// `(window start in seconds, Mbps)`.
    pub points: Vec<(f64, f64)>,
    pub max_mbps: f64,
    pub min_mbps: f64,
    pub mean_mbps: f64,
    pub total_bytes: u64,
}

struct ThroughputTracker {
    window: SimTime,
    sinks: Option<HashSet<NodeId>>,
    bytes: Vec<u64>,
}

impl ThroughputTracker {
    fn new(window_s: f64, sinks: Option<&[NodeId]>) -> Result<Self, MetricsError> {
        if !(window_s.is_finite() && window_s > 0.0) {
            return Err(MetricsError::BadWindow(window_s));
        }
        let window = SimTime::from_secs_f64(window_s).map_err(|_| MetricsError::BadWindow(window_s))?;
        if window == SimTime::ZERO {
            return Err(MetricsError::BadWindow(window_s));
        }
        Ok(ThroughputTracker {
            window,
            sinks: sinks.map(|s| s.iter().copied().collect()),
            bytes: Vec::new(),
        })
    }

    fn at_sink(&self, rec: &TraceRecord) -> bool {
        match &self.sinks {
            Some(s) => s.contains(&rec.to_node),
            None => rec.pkt_type.is_data() && rec.to_node == rec.dst_addr.node,
        }
    }

    fn push(&mut self, rec: &TraceRecord) {
        if rec.event != TraceEvent::Receive || !self.at_sink(rec) {
            return;
        }
        let idx = (rec.time.as_nanos() / self.window.as_nanos()) as usize;
        if self.bytes.len() <= idx {
            self.bytes.resize(idx + 1, 0);
        }
        self.bytes[idx] += rec.pkt_size as u64;
    }

    fn finish(mut self, horizon: Option<SimTime>) -> ThroughputSeries {
        let w = self.window.as_nanos();
        if let Some(h) = horizon {
            let n = h.as_nanos().div_ceil(w).max(1) as usize;
            if self.bytes.len() > n {
                // Records stamped exactly at the horizon belong to the last window.
                let tail: u64 = self.bytes.drain(n..).sum();
                self.bytes[n - 1] += tail;
            } else {
                self.bytes.resize(n, 0);
            }
        }
        let window_s = self.window.as_secs_f64();
        let points: Vec<(f64, f64)> = self
            .bytes
            .iter()
            .enumerate()
            .map(|(i, &b)| (i as f64 * window_s, b as f64 * 8.0 / window_s / 1e6))
            .collect();
        let ext = Extremes::of(points.iter().map(|p| p.1)).unwrap_or(Extremes { min: 0.0, max: 0.0 });
        let mean = if points.is_empty() {
            0.0
        } else {
            points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64
        };
        ThroughputSeries {
            window_s,
            points,
            max_mbps: ext.max,
            min_mbps: ext.min,
            mean_mbps: mean,
            total_bytes: self.bytes.iter().sum(),
        }
    }
}

/// Windowed receive rate at the sinks. With `sinks = None`, a data packet
/// counts when it is received at its destination node.
pub fn compute_throughput_series(
    records: impl IntoIterator<Item = TraceRecord>,
    sinks: Option<&[NodeId]>,
    window_s: f64,
    horizon_s: Option<f64>,
) -> Result<ThroughputSeries, MetricsError> {
    let mut t = ThroughputTracker::new(window_s, sinks)?;
    for rec in records {
        t.push(&rec);
    }
    let horizon = horizon_s.map(|h| SimTime::from_secs_f64(h).unwrap_or(SimTime::ZERO));
    Ok(t.finish(horizon))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySample {
    pub pkt_id: u64,
    pub kind: PacketKind,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelaySummary {
    pub samples: Vec<DelaySample>,
    pub all: Option<Extremes>,
    pub data: Option<Extremes>,
    pub ack: Option<Extremes>,
    pub mean_s: Option<f64>,
    pub mean_data_s: Option<f64>,
}

#[derive(Default)]
struct DelayTracker {
    pending: HashMap<u64, SimTime>,
    samples: Vec<DelaySample>,
}

impl DelayTracker {
    fn push(&mut self, rec: &TraceRecord) -> Result<(), MetricsError> {
        match rec.event {
            TraceEvent::Enqueue if rec.from_node == rec.src_addr.node => {
                self.pending.entry(rec.pkt_id).or_insert(rec.time);
            }
            TraceEvent::Receive if rec.to_node == rec.dst_addr.node => {
                let sent = self
                    .pending
                    .remove(&rec.pkt_id)
                    .ok_or(MetricsError::UnmatchedReceive {
                        pkt_id: rec.pkt_id,
                        node: rec.to_node,
                    })?;
                self.samples.push(DelaySample {
                    pkt_id: rec.pkt_id,
                    kind: rec.pkt_type,
                    delay_s: (rec.time - sent).as_secs_f64(),
                });
            }
            TraceEvent::Drop => {
                self.pending.remove(&rec.pkt_id);
            }
            _ => {}
        }
        Ok(())
    }

    fn finish(self) -> DelaySummary {
        let mean = |it: &mut dyn Iterator<Item = f64>| {
            let (n, s) = it.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
            (n > 0).then(|| s / n as f64)
        };
        let all = Extremes::of(self.samples.iter().map(|s| s.delay_s));
        let data = Extremes::of(
            self.samples
                .iter()
                .filter(|s| s.kind.is_data())
                .map(|s| s.delay_s),
        );
        let ack = Extremes::of(
            self.samples
                .iter()
                .filter(|s| s.kind == PacketKind::Ack)
                .map(|s| s.delay_s),
        );
        let mean_s = mean(&mut self.samples.iter().map(|s| s.delay_s));
        let mean_data_s = mean(
            &mut self
                .samples
                .iter()
                .filter(|s| s.kind.is_data())
                .map(|s| s.delay_s),
        );
        DelaySummary {
            samples: self.samples,
            all,
            data,
            ack,
            mean_s,
            mean_data_s,
        }
    }
}

/// End-to-end delay per packet: first `+` at the source node to the `r` at
/// the destination node. Dropped packets yield no sample.
pub fn compute_delays(
    records: impl IntoIterator<Item = TraceRecord>,
) -> Result<DelaySummary, MetricsError> {
    let mut t = DelayTracker::default();
    for rec in records {
        t.push(&rec)?;
    }
    Ok(t.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueSeries {
    pub from: NodeId,
    pub to: NodeId,
    /// Value after every record at this queue, starting from `(0, 0)`.
    pub points: Vec<(SimTime, u32)>,
    pub max: u32,
    pub min: u32,
    /// Time-weighted mean over `[0, end]`.
    pub time_mean: f64,
    pub balance: QueueBalance,
}

impl QueueSeries {
    /// Keeps only the last value at each distinct time stamp.
    pub fn change_points(&self) -> Vec<(SimTime, u32)> {
        collapse_same_time(&self.points)
    }
}

pub fn collapse_same_time(points: &[(SimTime, u32)]) -> Vec<(SimTime, u32)> {
    let mut out: Vec<(SimTime, u32)> = Vec::with_capacity(points.len());
    for &(t, v) in points {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 = v,
            _ => out.push((t, v)),
        }
    }
    out
}

/// Event counts at one queue; `enqueued == dequeued + matched_drops +
/// final_backlog` holds for any consistent trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueueBalance {
    pub from: NodeId,
    pub to: NodeId,
    pub enqueued: u64,
    pub dequeued: u64,
    pub matched_drops: u64,
    pub unmatched_drops: u64,
    pub final_backlog: u64,
}

impl QueueBalance {
    pub fn conserved(&self) -> bool {
        self.enqueued == self.dequeued + self.matched_drops + self.final_backlog
    }
}

struct QueueTracker {
    from: NodeId,
    to: NodeId,
    backlog: i64,
    admitted: HashSet<u64>,
    balance: QueueBalance,
    series: Option<Vec<(SimTime, u32)>>,
    max: u32,
    min: u32,
    area: f64,
    last_time: SimTime,
}

impl QueueTracker {
    fn new(from: NodeId, to: NodeId, record_series: bool) -> Self {
        QueueTracker {
            from,
            to,
            backlog: 0,
            admitted: HashSet::new(),
            balance: QueueBalance {
                from,
                to,
                ..QueueBalance::default()
            },
            series: record_series.then(|| vec![(SimTime::ZERO, 0)]),
            max: 0,
            min: 0,
            area: 0.0,
            last_time: SimTime::ZERO,
        }
    }

    fn push(&mut self, rec: &TraceRecord) -> Result<(), MetricsError> {
        match rec.event {
            TraceEvent::Enqueue => {
                self.admitted.insert(rec.pkt_id);
                self.balance.enqueued += 1;
                self.step(rec.time, 1)
            }
            TraceEvent::Dequeue => {
                self.admitted.remove(&rec.pkt_id);
                self.balance.dequeued += 1;
                self.step(rec.time, -1)
            }
            TraceEvent::Drop => {
                if self.admitted.remove(&rec.pkt_id) {
                    self.balance.matched_drops += 1;
                    self.step(rec.time, -1)
                } else {
                    self.balance.unmatched_drops += 1;
                    Ok(())
                }
            }
            TraceEvent::Receive => Ok(()),
        }
    }

    fn step(&mut self, time: SimTime, delta: i64) -> Result<(), MetricsError> {
        if time > self.last_time {
            self.area += self.backlog as f64 * (time - self.last_time).as_secs_f64();
            self.last_time = time;
        }
        self.backlog += delta;
        if self.backlog < 0 {
            return Err(MetricsError::NegativeBacklog {
                from: self.from,
                to: self.to,
                time,
            });
        }
        let v = self.backlog as u32;
        self.max = self.max.max(v);
        self.min = self.min.min(v);
        if let Some(s) = &mut self.series {
            s.push((time, v));
        }
        Ok(())
    }

    fn finish(mut self, end: Option<SimTime>) -> QueueSeries {
        let end = end.unwrap_or(self.last_time).max(self.last_time);
        self.area += self.backlog as f64 * (end - self.last_time).as_secs_f64();
        let span = end.as_secs_f64();
        self.balance.final_backlog = self.backlog as u64;
        QueueSeries {
            from: self.from,
            to: self.to,
            points: self.series.unwrap_or_default(),
            max: self.max,
            min: self.min,
            time_mean: if span > 0.0 { self.area / span } else { 0.0 },
            balance: self.balance,
        }
    }
}

/// Backlog (in packets) of the queue `from -> to` after every record there.
pub fn compute_queue_length_series(
    records: impl IntoIterator<Item = TraceRecord>,
    from: NodeId,
    to: NodeId,
) -> Result<QueueSeries, MetricsError> {
    let mut t = QueueTracker::new(from, to, true);
    for rec in records {
        if rec.from_node == from && rec.to_node == to {
            t.push(&rec)?;
        }
    }
    Ok(t.finish(None))
}

/// What a scenario's reports must agree on to be comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fingerprint {
    pub duration_s: f64,
    pub packet_size_bytes: u32,
    pub link_rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    pub label: String,
    pub bottleneck: (NodeId, NodeId),
    pub window_s: f64,
    pub sinks: Option<Vec<NodeId>>,
    pub packet_size_bytes: u32,
    pub link_rate_bps: f64,
    /// Utilization and series span this horizon; `None` uses the last record.
    pub duration_s: Option<f64>,
}

impl AnalysisParams {
    /// Defaults for a dumbbell run of `cfg`.
    pub fn for_scenario(cfg: &crate::config::ScenarioConfig, label: impl Into<String>) -> Self {
        let n = cfg.flows.count;
        AnalysisParams {
            label: label.into(),
            bottleneck: (n, n + 1),
            window_s: 1.0,
            sinks: None,
            packet_size_bytes: cfg.scenario.packet_size_bytes,
            link_rate_bps: cfg.bottleneck_rate_bps(),
            duration_s: Some(cfg.scenario.duration_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub label: String,
    pub records: u64,
    pub sent_packets: u64,
    pub lost_packets: u64,
    pub loss_ratio_pct: f64,
    pub drop_events: u64,
    pub throughput: ThroughputSeries,
    pub delay: DelaySummary,
    pub queue: QueueSeries,
    pub utilization_pct: f64,
    /// Received megabits divided by the mean data-packet delay in seconds.
    pub delay_throughput: f64,
    /// Balance of every queue that appeared in the trace, sorted by hop.
    pub queues: Vec<QueueBalance>,
    pub fingerprint: Fingerprint,
}

impl MetricsReport {
    pub fn summary(&self) -> ReportSummary {
        ReportSummary::from_report(self)
    }
}

/// Single-pass analysis of a trace. Feed records with [`Analyzer::push`] (or
/// use it as a [`TraceSink`]) and call [`Analyzer::finish`].
pub struct Analyzer {
    params: AnalysisParams,
    records: u64,
    sent: u64,
    lost: u64,
    drop_events: u64,
    last_time: SimTime,
    throughput: ThroughputTracker,
    delay: DelayTracker,
    queues: HashMap<(NodeId, NodeId), QueueTracker>,
    error: Option<MetricsError>,
}

impl Analyzer {
    pub fn new(params: AnalysisParams) -> Result<Self, MetricsError> {
        let throughput = ThroughputTracker::new(params.window_s, params.sinks.as_deref())?;
        let mut queues = HashMap::new();
        let (f, t) = params.bottleneck;
        queues.insert((f, t), QueueTracker::new(f, t, true));
        Ok(Analyzer {
            params,
            records: 0,
            sent: 0,
            lost: 0,
            drop_events: 0,
            last_time: SimTime::ZERO,
            throughput,
            delay: DelayTracker::default(),
            queues,
            error: None,
        })
    }

    pub fn push(&mut self, rec: &TraceRecord) -> Result<(), MetricsError> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        self.records += 1;
        self.last_time = self.last_time.max(rec.time);
        let hop = (rec.from_node, rec.to_node);
        if hop == self.params.bottleneck && rec.pkt_type.is_data() {
            match rec.event {
                TraceEvent::Enqueue => self.sent += 1,
                TraceEvent::Drop => self.lost += 1,
                _ => {}
            }
        }
        if rec.event == TraceEvent::Drop {
            self.drop_events += 1;
        }
        self.throughput.push(rec);
        self.delay.push(rec)?;
        if rec.event != TraceEvent::Receive {
            self.queues
                .entry(hop)
                .or_insert_with(|| QueueTracker::new(hop.0, hop.1, false))
                .push(rec)?;
        }
        Ok(())
    }

    /// First error seen while used as a [`TraceSink`].
    pub fn error(&self) -> Option<&MetricsError> {
        self.error.as_ref()
    }

    pub fn finish(mut self) -> Result<MetricsReport, MetricsError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        let horizon = match self.params.duration_s {
            Some(d) => Some(SimTime::from_secs_f64(d).map_err(|_| MetricsError::BadReport {
                name: self.params.label.clone(),
                reason: format!("invalid duration {d}"),
            })?),
            None => None,
        };
        let end = horizon.unwrap_or(self.last_time);
        let duration_s = self
            .params
            .duration_s
            .unwrap_or_else(|| self.last_time.as_secs_f64());
        let loss_ratio_pct = compute_loss_ratio(self.sent, self.lost)?;
        let utilization_pct = if duration_s > 0.0 {
            compute_utilization(
                self.sent,
                self.params.packet_size_bytes,
                self.params.link_rate_bps,
                duration_s,
            )
        } else {
            0.0
        };
        let throughput = self.throughput.finish(Some(end));
        let delay = self.delay.finish();
        let delay_throughput = match delay.mean_data_s {
            Some(d) if d > 0.0 => throughput.total_bytes as f64 * 8.0 / 1e6 / d,
            _ => 0.0,
        };
        let bn = self.params.bottleneck;
        let queue = self
            .queues
            .remove(&bn)
            .expect("bottleneck tracker")
            .finish(Some(end));
        let mut queues: Vec<QueueBalance> = self
            .queues
            .into_values()
            .map(|q| q.finish(Some(end)).balance)
            .collect();
        queues.push(queue.balance);
        queues.sort_by_key(|b| (b.from, b.to));
        Ok(MetricsReport {
            label: self.params.label,
            records: self.records,
            sent_packets: self.sent,
            lost_packets: self.lost,
            loss_ratio_pct,
            drop_events: self.drop_events,
            throughput,
            delay,
            queue,
            utilization_pct,
            delay_throughput,
            queues,
            fingerprint: Fingerprint {
                duration_s,
                packet_size_bytes: self.params.packet_size_bytes,
                link_rate_bps: self.params.link_rate_bps,
            },
        })
    }
}

impl TraceSink for Analyzer {
    fn record(&mut self, rec: &TraceRecord) {
        if self.error.is_none() {
            if let Err(e) = self.push(rec) {
                self.error = Some(e);
            }
        }
    }
}

/// Analyzes an already-parsed record stream.
pub fn analyze_records<I, E>(records: I, params: AnalysisParams) -> Result<MetricsReport, E>
where
    I: IntoIterator<Item = Result<TraceRecord, E>>,
    E: From<MetricsError>,
{
    let mut a = Analyzer::new(params)?;
    for rec in records {
        a.push(&rec?)?;
    }
    Ok(a.finish()?)
}
