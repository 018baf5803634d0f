//! Runs a configured dumbbell scenario and streams its trace.

use crate::aqm::{build_discipline, LinkContext, QueueDiscipline};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::packet::{NodeId, Packet, PacketIds, PacketKind};
use crate::sim::{EventHandle, RandomSource, Scheduler, SimTime};
use crate::topology::{
    build_dumbbell, AckOutcome, LinkId, Network, TcpConfig, TcpSink, TcpSource,
};
use crate::trace::{TraceEvent, TraceRecord, TraceSink};

#[derive(Debug, Clone, Copy)]
enum Event {
    FlowStart(u32),
    /// `pkt` finished propagating over `link` and reaches its far end.
    Arrive { link: LinkId, pkt: Packet },
    TxDone(LinkId),
    Timeout(u32),
}

struct LinkState {
    queue: Box<dyn QueueDiscipline>,
    in_service: Option<Packet>,
    max_backlog_bytes: u64,
}

/// Per-link counters from the simulator's own bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkStats {
    pub from: NodeId,
    pub to: NodeId,
    pub enqueued: u64,
    pub dequeued: u64,
    pub dropped: u64,
    pub data_enqueued: u64,
    pub data_dropped: u64,
    pub max_backlog_bytes: u64,
    pub buffer_bytes: u64,
    pub final_backlog_packets: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowStats {
    pub flow_id: u32,
    pub data_sent: u64,
    pub retransmissions: u64,
    pub timeouts: u64,
    pub delivered: u64,
    pub final_cwnd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub events: u64,
    pub trace_records: u64,
    pub duration_s: f64,
    pub packet_size_bytes: u32,
    pub bottleneck_rate_bps: f64,
    pub bottleneck: (NodeId, NodeId),
    pub links: Vec<LinkStats>,
    pub flows: Vec<FlowStats>,
    /// `(time, backlog packets)` after every operation on the forward
    /// bottleneck queue, with times rounded like the trace.
    pub bottleneck_samples: Vec<(SimTime, u32)>,
    pub min_cwnd_seen: f64,
    pub min_ssthresh_seen: f64,
}

impl RunSummary {
    pub fn bottleneck_stats(&self) -> &LinkStats {
        self.links
            .iter()
            .find(|l| (l.from, l.to) == self.bottleneck)
            .expect("bottleneck present")
    }

    pub fn sent_packets(&self) -> u64 {
        self.bottleneck_stats().data_enqueued
    }

    pub fn lost_packets(&self) -> u64 {
        self.bottleneck_stats().data_dropped
    }

    pub fn utilization_pct(&self) -> f64 {
        crate::metrics::compute_utilization(
            self.sent_packets(),
            self.packet_size_bytes,
            self.bottleneck_rate_bps,
            self.duration_s,
        )
    }
}

struct World<S> {
    net: Network,
    links: Vec<LinkState>,
    stats: Vec<LinkStats>,
    sources: Vec<TcpSource>,
    sinks: Vec<TcpSink>,
    timers: Vec<Option<EventHandle>>,
    data_sent: Vec<u64>,
    ack_size: u32,
    rng: RandomSource,
    ids: PacketIds,
    trace: S,
    records: u64,
    probe: LinkId,
    probe_samples: Vec<(SimTime, u32)>,
    min_cwnd: f64,
    min_ssthresh: f64,
}

impl<S: TraceSink> World<S> {
    fn emit(&mut self, event: TraceEvent, now: SimTime, link: LinkId, pkt: &Packet) {
        let l = self.net.link(link);
        let rec = TraceRecord::for_packet(event, now, l.from, l.to, pkt);
        self.trace.record(&rec);
        self.records += 1;
    }

    fn sample(&mut self, link: LinkId, now: SimTime, backlog: usize) {
        let st = &mut self.links[link];
        st.max_backlog_bytes = st.max_backlog_bytes.max(st.queue.backlog_bytes());
        debug_assert!(st.queue.backlog_bytes() <= st.queue.buffer_bytes());
        if link == self.probe {
            self.probe_samples.push((now.round_to_micros(), backlog as u32));
        }
    }

    fn handle(&mut self, sched: &mut Scheduler<Event>, now: SimTime, ev: Event) {
        match ev {
            Event::FlowStart(flow) => self.pump(sched, now, flow),
            Event::Arrive { link, pkt } => self.arrive(sched, now, link, pkt),
            Event::TxDone(link) => {
                let pkt = self.links[link].in_service.take().expect("link was busy");
                let delay = self.net.link(link).prop_delay;
                sched.schedule_in(delay, Event::Arrive { link, pkt });
                self.start_next(sched, now, link);
            }
            Event::Timeout(flow) => {
                self.timers[flow as usize] = None;
                self.sources[flow as usize].on_timeout();
                self.pump(sched, now, flow);
            }
        }
    }

    fn arrive(&mut self, sched: &mut Scheduler<Event>, now: SimTime, link: LinkId, pkt: Packet) {
        self.emit(TraceEvent::Receive, now, link, &pkt);
        let node = self.net.link(link).to;
        if pkt.dst.node != node {
            let next = self
                .net
                .next_hop(node, pkt.dst.node)
                .expect("dumbbell is connected");
            self.enqueue(sched, now, next, pkt);
            return;
        }
        let flow = pkt.flow_id - 1;
        match pkt.kind {
            PacketKind::Tcp | PacketKind::Cbr => {
                let ack = self.sinks[flow as usize].ack_for(&pkt, self.ack_size, now, &mut self.ids);
                self.send_from(sched, now, node, ack);
            }
            PacketKind::Ack => self.on_ack(sched, now, flow, pkt.seq),
        }
    }

    fn on_ack(&mut self, sched: &mut Scheduler<Event>, now: SimTime, flow: u32, ack_seq: i64) {
        let outcome = self.sources[flow as usize].on_ack(ack_seq);
        self.observe_window(flow);
        match outcome {
            AckOutcome::NewAck => {
                self.arm_timer(sched, flow, true);
                self.pump(sched, now, flow);
            }
            AckOutcome::FastRetransmit(seq) => {
                let src = &mut self.sources[flow as usize];
                let pkt = src.data_packet(seq, now, &mut self.ids);
                let node = src.addr.node;
                self.data_sent[flow as usize] += 1;
                self.send_from(sched, now, node, pkt);
                self.arm_timer(sched, flow, true);
            }
            AckOutcome::Duplicate | AckOutcome::Stale => {}
        }
    }

    fn observe_window(&mut self, flow: u32) {
        let st = &self.sources[flow as usize].state;
        self.min_cwnd = self.min_cwnd.min(st.cwnd);
        self.min_ssthresh = self.min_ssthresh.min(st.ssthresh);
    }

    /// Sends whatever the window allows and makes sure a timer is running.
    fn pump(&mut self, sched: &mut Scheduler<Event>, now: SimTime, flow: u32) {
        self.observe_window(flow);
        let src = &mut self.sources[flow as usize];
        let node = src.addr.node;
        let pkts = src.try_send(now, &mut self.ids);
        self.data_sent[flow as usize] += pkts.len() as u64;
        for p in pkts {
            self.send_from(sched, now, node, p);
        }
        self.arm_timer(sched, flow, false);
    }

    /// Starts the retransmission timer if data is outstanding. With
    /// `restart`, a running timer is replaced.
    fn arm_timer(&mut self, sched: &mut Scheduler<Event>, flow: u32, restart: bool) {
        let idx = flow as usize;
        if let Some(h) = self.timers[idx] {
            if !restart {
                return;
            }
            sched.cancel(h);
            self.timers[idx] = None;
        }
        let src = &self.sources[idx];
        if src.state.in_flight() > 0 {
            self.timers[idx] = Some(sched.schedule_in(src.rto(), Event::Timeout(flow)));
        }
    }

    fn send_from(&mut self, sched: &mut Scheduler<Event>, now: SimTime, node: NodeId, pkt: Packet) {
        let link = self
            .net
            .next_hop(node, pkt.dst.node)
            .expect("dumbbell is connected");
        self.enqueue(sched, now, link, pkt);
    }

    fn enqueue(&mut self, sched: &mut Scheduler<Event>, now: SimTime, link: LinkId, pkt: Packet) {
        let before = self.links[link].queue.backlog_packets();
        let adm = self.links[link].queue.enqueue(pkt, now, &mut self.rng);
        let after = self.links[link].queue.backlog_packets();
        for (k, victim) in adm.evicted().iter().enumerate() {
            self.emit(TraceEvent::Drop, now, link, victim);
            self.count_drop(link, victim);
            self.sample(link, now, before - k - 1);
        }
        if adm.admitted {
            self.emit(TraceEvent::Enqueue, now, link, &pkt);
            let st = &mut self.stats[link];
            st.enqueued += 1;
            if pkt.kind.is_data() {
                st.data_enqueued += 1;
            }
            self.sample(link, now, after);
        } else {
            self.emit(TraceEvent::Drop, now, link, &pkt);
            self.count_drop(link, &pkt);
        }
        if self.links[link].in_service.is_none() {
            self.start_next(sched, now, link);
        }
    }

    fn count_drop(&mut self, link: LinkId, pkt: &Packet) {
        let st = &mut self.stats[link];
        st.dropped += 1;
        if pkt.kind.is_data() {
            st.data_dropped += 1;
        }
    }

    fn start_next(&mut self, sched: &mut Scheduler<Event>, now: SimTime, link: LinkId) {
        let Some(pkt) = self.links[link].queue.dequeue(now) else {
            return;
        };
        self.emit(TraceEvent::Dequeue, now, link, &pkt);
        self.stats[link].dequeued += 1;
        let backlog = self.links[link].queue.backlog_packets();
        self.sample(link, now, backlog);
        let tx = self.net.link(link).transmission_time(pkt.size_bytes);
        self.links[link].in_service = Some(pkt);
        sched.schedule_in(tx, Event::TxDone(link));
    }
}

/// Runs `cfg` to its horizon, feeding every trace record to `sink`.
pub fn run_scenario<S: TraceSink>(cfg: &ScenarioConfig, sink: S) -> Result<RunSummary> {
    let net = build_dumbbell(cfg)?;
    let pkt_size = cfg.scenario.packet_size_bytes;
    let links: Vec<LinkState> = net
        .links()
        .iter()
        .map(|l| LinkState {
            queue: build_discipline(
                l.discipline,
                &cfg.aqm,
                LinkContext {
                    rate_bps: l.rate_bps,
                    buffer_bytes: l.buffer_bytes,
                    mean_pkt_bytes: pkt_size,
                },
            ),
            in_service: None,
            max_backlog_bytes: 0,
        })
        .collect();
    let stats = net
        .links()
        .iter()
        .map(|l| LinkStats {
            from: l.from,
            to: l.to,
            buffer_bytes: l.buffer_bytes,
            ..LinkStats::default()
        })
        .collect();
    let tcp = TcpConfig::from_section(&cfg.tcp, pkt_size);
    let flows = net.flow_count();
    let sources = (0..flows)
        .map(|f| {
            TcpSource::new(
                f + 1,
                crate::packet::Addr::new(net.source(f), 0),
                crate::packet::Addr::new(net.sink(f), 0),
                tcp,
            )
        })
        .collect();
    let probe = net.bottleneck();
    let bottleneck = (net.router1(), net.router2());

    let mut sched = Scheduler::new();
    for f in 0..flows {
        let start = SimTime::from_secs_f64(f as f64 * cfg.flows.stagger_ms / 1e3)?;
        sched.schedule(start, Event::FlowStart(f))?;
    }
    let mut world = World {
        net,
        links,
        stats,
        sources,
        sinks: vec![TcpSink::new(); flows as usize],
        timers: vec![None; flows as usize],
        data_sent: vec![0; flows as usize],
        ack_size: cfg.tcp.ack_size_bytes,
        rng: RandomSource::new(cfg.scenario.seed),
        ids: PacketIds::default(),
        trace: sink,
        records: 0,
        probe,
        probe_samples: vec![(SimTime::ZERO, 0)],
        min_cwnd: f64::INFINITY,
        min_ssthresh: f64::INFINITY,
    };
    let events = sched.run(cfg.duration(), |sched, now, ev| world.handle(sched, now, ev));

    let mut link_stats = world.stats;
    for (st, ls) in link_stats.iter_mut().zip(&world.links) {
        st.max_backlog_bytes = ls.max_backlog_bytes;
        st.final_backlog_packets = ls.queue.backlog_packets() as u64;
    }
    let flow_stats = world
        .sources
        .iter()
        .zip(&world.sinks)
        .zip(&world.data_sent)
        .map(|((src, sink), &sent)| FlowStats {
            flow_id: src.flow_id,
            data_sent: sent,
            retransmissions: src.retransmissions,
            timeouts: src.timeouts,
            delivered: sink.received,
            final_cwnd: src.state.cwnd,
        })
        .collect();
    log::debug!(
        "run finished: {events} events, {} trace records, seed {}",
        world.records,
        cfg.scenario.seed
    );
    Ok(RunSummary {
        events,
        trace_records: world.records,
        duration_s: cfg.scenario.duration_s,
        packet_size_bytes: pkt_size,
        bottleneck_rate_bps: cfg.bottleneck_rate_bps(),
        bottleneck,
        links: link_stats,
        flows: flow_stats,
        bottleneck_samples: world.probe_samples,
        min_cwnd_seen: world.min_cwnd,
        min_ssthresh_seen: world.min_ssthresh,
    })
}
