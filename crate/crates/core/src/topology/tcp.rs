//! Simplified Reno sender and cumulative-ACK receiver.
//!
//! The sender keeps one retransmission timer, grows `cwnd` by one per new ACK
//! in slow start and by `1/cwnd` in congestion avoidance, halves on the
//! third duplicate ACK, and falls back to `cwnd = 1` with go-back-N on a
//! timeout. There is no RTT estimation: the RTO is fixed and doubles on each
//! consecutive timeout.

use std::collections::BTreeSet;

use crate::config::TcpSection;
use crate::packet::{Addr, Packet, PacketIds, PacketKind};
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcpConfig {
    pub initial_cwnd: f64,
    pub initial_ssthresh: f64,
    pub initial_rto_s: f64,
    pub max_rto_s: f64,
    /// Receiver-advertised window in packets (may be infinite); caps the
    /// usable cwnd.
    pub max_window: f64,
    pub packet_size_bytes: u32,
    pub ack_size_bytes: u32,
}

impl TcpConfig {
    pub fn from_section(tcp: &TcpSection, packet_size_bytes: u32) -> Self {
        TcpConfig {
            initial_cwnd: tcp.initial_cwnd,
            initial_ssthresh: tcp.initial_ssthresh,
            initial_rto_s: tcp.initial_rto_s,
            max_rto_s: tcp.max_rto_s,
            max_window: tcp.max_window.unwrap_or(f64::INFINITY),
            packet_size_bytes,
            ack_size_bytes: tcp.ack_size_bytes,
        }
    }
}

impl Default for TcpConfig {
    fn default() -> Self {
        Self::from_section(&TcpSection::default(), 2000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcpSourceState {
    /// Packets.
    pub cwnd: f64,
    pub ssthresh: f64,
    /// Next new sequence number to send.
    pub next_seq: i64,
    /// Highest cumulatively acknowledged sequence number (-1: none yet).
    pub highest_acked: i64,
    pub dup_ack_count: u32,
    pub rto_s: f64,
    /// Receiver-advertised window in packets.
    pub max_window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckOutcome {
    /// Cumulative ACK advanced.
    NewAck,
    Duplicate,
    /// Third duplicate: retransmit this sequence number.
    FastRetransmit(i64),
    /// Older than the current cumulative ACK.
    Stale,
}

impl TcpSourceState {
    pub fn new(cfg: &TcpConfig) -> Self {
        TcpSourceState {
            cwnd: cfg.initial_cwnd,
            ssthresh: cfg.initial_ssthresh,
            next_seq: 0,
            highest_acked: -1,
            dup_ack_count: 0,
            rto_s: cfg.initial_rto_s,
            max_window: cfg.max_window,
        }
    }

    /// Sent but not yet cumulatively acknowledged.
    pub fn in_flight(&self) -> u64 {
        (self.next_seq - self.highest_acked - 1).max(0) as u64
    }

    /// How many new packets the window allows right now.
    pub fn sendable(&self) -> u64 {
        (self.cwnd.min(self.max_window).floor() as u64).saturating_sub(self.in_flight())
    }

    pub fn on_ack(&mut self, ack_seq: i64, cfg: &TcpConfig) -> AckOutcome {
        if ack_seq > self.highest_acked {
            self.highest_acked = ack_seq;
            if self.next_seq <= ack_seq {
                self.next_seq = ack_seq + 1;
            }
            self.dup_ack_count = 0;
            self.rto_s = cfg.initial_rto_s;
            if self.cwnd < self.ssthresh {
                self.cwnd += 1.0;
            } else {
                self.cwnd += 1.0 / self.cwnd;
            }
            return AckOutcome::NewAck;
        }
        if ack_seq < self.highest_acked || self.in_flight() == 0 {
            return AckOutcome::Stale;
        }
        self.dup_ack_count += 1;
        if self.dup_ack_count == 3 {
            self.ssthresh = (self.cwnd / 2.0).max(2.0);
            self.cwnd = self.ssthresh;
            return AckOutcome::FastRetransmit(self.highest_acked + 1);
        }
        AckOutcome::Duplicate
    }

    /// Timer expiry: collapse the window, back off the RTO and rewind
    /// `next_seq` to the oldest unacknowledged segment.
    pub fn on_timeout(&mut self, cfg: &TcpConfig) {
        self.ssthresh = (self.cwnd / 2.0).max(2.0);
        self.cwnd = 1.0;
        self.rto_s = (self.rto_s * 2.0).min(cfg.max_rto_s);
        self.dup_ack_count = 0;
        self.next_seq = self.highest_acked + 1;
    }
}

#[derive(Debug, Clone)]
pub struct TcpSource {
    pub flow_id: u32,
    pub addr: Addr,
    pub peer: Addr,
    pub cfg: TcpConfig,
    pub state: TcpSourceState,
    pub retransmissions: u64,
    pub timeouts: u64,
    /// Highest sequence number ever sent; anything at or below it is a resend.
    max_sent: i64,
}

impl TcpSource {
    pub fn new(flow_id: u32, addr: Addr, peer: Addr, cfg: TcpConfig) -> Self {
        TcpSource {
            flow_id,
            addr,
            peer,
            cfg,
            state: TcpSourceState::new(&cfg),
            retransmissions: 0,
            timeouts: 0,
            max_sent: -1,
        }
    }

    pub fn data_packet(&mut self, seq: i64, now: SimTime, ids: &mut PacketIds) -> Packet {
        if seq <= self.max_sent {
            self.retransmissions += 1;
        }
        self.max_sent = self.max_sent.max(seq);
        Packet {
            id: ids.next_id(),
            flow_id: self.flow_id,
            kind: PacketKind::Tcp,
            size_bytes: self.cfg.packet_size_bytes,
            seq,
            src: self.addr,
            dst: self.peer,
            created_at: now,
        }
    }

    /// Emits packets while the window has room.
    pub fn try_send(&mut self, now: SimTime, ids: &mut PacketIds) -> Vec<Packet> {
        let n = self.state.sendable();
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let seq = self.state.next_seq;
            self.state.next_seq += 1;
            out.push(self.data_packet(seq, now, ids));
        }
        out
    }

    pub fn on_ack(&mut self, ack_seq: i64) -> AckOutcome {
        self.state.on_ack(ack_seq, &self.cfg)
    }

    pub fn on_timeout(&mut self) {
        self.timeouts += 1;
        self.state.on_timeout(&self.cfg);
    }

    pub fn rto(&self) -> SimTime {
        SimTime::from_secs_f64(self.state.rto_s).expect("positive rto")
    }
}

/// Cumulative-ACK receiver.
#[derive(Debug, Clone, Default)]
pub struct TcpSink {
    next_expected: i64,
    out_of_order: BTreeSet<i64>,
    pub received: u64,
}

impl TcpSink {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `seq` and returns the cumulative ACK number.
    pub fn on_data(&mut self, seq: i64) -> i64 {
        self.received += 1;
        if seq == self.next_expected {
            self.next_expected += 1;
            while self.out_of_order.remove(&self.next_expected) {
                self.next_expected += 1;
            }
        } else if seq > self.next_expected {
            self.out_of_order.insert(seq);
        }
        self.next_expected - 1
    }

    /// Builds the ACK answering `data`.
    pub fn ack_for(
        &mut self,
        data: &Packet,
        ack_size_bytes: u32,
        now: SimTime,
        ids: &mut PacketIds,
    ) -> Packet {
        let ack_seq = self.on_data(data.seq);
        Packet {
            id: ids.next_id(),
            flow_id: data.flow_id,
            kind: PacketKind::Ack,
            size_bytes: ack_size_bytes,
            seq: ack_seq,
            src: data.dst,
            dst: data.src,
            created_at: now,
        }
    }
}
