//! Random Early Detection.
//!
//! The average queue length is an EWMA of the instantaneous length (in
//! packets) sampled on every arrival. Between `min_th` and `max_th` an
//! arrival is dropped with probability `p_a = p_b / (1 - count * p_b)`,
//! where `p_b` grows linearly from 0 to `max_p` and `count` is the number of
//! arrivals accepted since the last drop.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Admission, DisciplineKind, LinkContext, QueueDiscipline, Verdict};
use crate::error::ConfigError;
use crate::packet::Packet;
use crate::sim::{RandomSource, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RedParams {
    pub w_q: f64,
    pub max_p: f64,
    /// Thresholds in packets.
    pub min_th: f64,
    pub max_th: f64,
}

impl Default for RedParams {
    fn default() -> Self {
        RedParams {
            w_q: 0.002,
            max_p: 0.1,
            min_th: 1.0,
            max_th: 2.0,
        }
    }
}

impl RedParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.w_q > 0.0 && self.w_q <= 1.0) {
            return Err(ConfigError::Invalid {
                key: "aqm.red.w_q",
                reason: format!("must be in (0, 1], got {}", self.w_q),
            });
        }
        if !(self.max_p > 0.0 && self.max_p <= 1.0) {
            return Err(ConfigError::Invalid {
                key: "aqm.red.max_p",
                reason: format!("must be in (0, 1], got {}", self.max_p),
            });
        }
        if !(self.min_th >= 0.0 && self.min_th < self.max_th) {
            return Err(ConfigError::Invalid {
                key: "aqm.red.min_th",
                reason: format!(
                    "need 0 <= min_th < max_th, got {} / {}",
                    self.min_th, self.max_th
                ),
            });
        }
        Ok(())
    }
}

/// One EWMA step: `(1 - w_q) * avg + w_q * q`.
pub fn red_avg_update(avg: f64, q: f64, w_q: f64) -> f64 {
    (1.0 - w_q) * avg + w_q * q
}

/// Decays `avg` as if `idle_packets` zero-length samples had been taken
/// while the queue sat empty.
pub fn red_idle_decay(avg: f64, w_q: f64, idle_packets: f64) -> f64 {
    avg * (1.0 - w_q).powf(idle_packets.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedState {
    pub params: RedParams,
    pub avg: f64,
    /// Arrivals accepted since the last drop; -1 while below `min_th`.
    pub count: i64,
    pub idle_since: Option<SimTime>,
}

impl RedState {
    pub fn new(params: RedParams) -> Self {
        RedState {
            params,
            avg: 0.0,
            count: -1,
            idle_since: Some(SimTime::ZERO),
        }
    }

    /// `(p_b, p_a)` for the current `avg` and `count`.
    pub fn probabilities(&self) -> (f64, f64) {
        let RedParams {
            min_th,
            max_th,
            max_p,
            ..
        } = self.params;
        if self.avg < min_th {
            return (0.0, 0.0);
        }
        if self.avg >= max_th {
            return (1.0, 1.0);
        }
        let p_b = max_p * (self.avg - min_th) / (max_th - min_th);
        let denom = 1.0 - self.count.max(0) as f64 * p_b;
        let p_a = if denom <= 0.0 { 1.0 } else { (p_b / denom).min(1.0) };
        (p_b, p_a)
    }
}

/// Early-drop decision for an arrival whose `avg` has already been updated.
/// Draws exactly one uniform variate when `avg` is between the thresholds
/// and none otherwise.
pub fn red_drop_decision(state: &mut RedState, rng: &mut RandomSource) -> Verdict {
    if state.avg < state.params.min_th {
        state.count = -1;
        return Verdict::Accept;
    }
    if state.avg >= state.params.max_th {
        state.count = 0;
        return Verdict::Drop;
    }
    let (_, p_a) = state.probabilities();
    if rng.chance(p_a) {
        state.count = 0;
        Verdict::Drop
    } else {
        state.count = state.count.max(0) + 1;
        Verdict::Accept
    }
}

#[derive(Debug)]
pub struct Red {
    state: RedState,
    link: LinkContext,
    backlog_bytes: u64,
    q: VecDeque<Packet>,
}

impl Red {
    pub fn new(params: RedParams, link: LinkContext) -> Self {
        Red {
            state: RedState::new(params),
            link,
            backlog_bytes: 0,
            q: VecDeque::new(),
        }
    }

    pub fn state(&self) -> &RedState {
        &self.state
    }
}

impl QueueDiscipline for Red {
    fn enqueue(&mut self, pkt: Packet, now: SimTime, rng: &mut RandomSource) -> Admission {
        let w_q = self.state.params.w_q;
        if let Some(since) = self.state.idle_since.take() {
            let idle_s = now.saturating_sub(since).as_secs_f64();
            let m = idle_s / self.link.packet_time_s();
            self.state.avg = red_idle_decay(self.state.avg, w_q, m);
        }
        self.state.avg = red_avg_update(self.state.avg, self.q.len() as f64, w_q);

        let early = red_drop_decision(&mut self.state, rng);
        let fits = self.backlog_bytes + pkt.size_bytes as u64 <= self.link.buffer_bytes;
        if early == Verdict::Drop {
            return self.reject(pkt, now);
        }
        if !fits {
            self.state.count = 0;
            return self.reject(pkt, now);
        }
        self.backlog_bytes += pkt.size_bytes as u64;
        self.q.push_back(pkt);
        Admission::accepted()
    }

    fn dequeue(&mut self, now: SimTime) -> Option<Packet> {
        let pkt = self.q.pop_front()?;
        self.backlog_bytes -= pkt.size_bytes as u64;
        if self.q.is_empty() {
            self.state.idle_since = Some(now);
        }
        Some(pkt)
    }

    fn backlog_bytes(&self) -> u64 {
        self.backlog_bytes
    }

    fn backlog_packets(&self) -> usize {
        self.q.len()
    }

    fn buffer_bytes(&self) -> u64 {
        self.link.buffer_bytes
    }

    fn kind(&self) -> DisciplineKind {
        DisciplineKind::Red
    }
}

impl Red {
    fn reject(&mut self, pkt: Packet, now: SimTime) -> Admission {
        if self.q.is_empty() && self.state.idle_since.is_none() {
            self.state.idle_since = Some(now);
        }
        Admission::rejected(pkt)
    }
}
