//! Random Exponential Marking.
//!
//! Each queue keeps a price updated once per period from the backlog
//! mismatch and the input/capacity rate mismatch. Arrivals are dropped with
//! probability `1 - phi^(-price)`, so the pass probability over several
//! links is `phi^(-sum of prices)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Admission, DisciplineKind, LinkContext, QueueDiscipline};
use crate::error::ConfigError;
use crate::packet::Packet;
use crate::sim::{RandomSource, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemParams {
    pub gamma: f64,
    pub phi: f64,
    pub alpha: f64,
    /// Target backlog in packets.
    pub target_backlog: f64,
    pub update_period_ms: f64,
}

impl Default for RemParams {
    fn default() -> Self {
        RemParams {
            gamma: 0.001,
            phi: 1.001,
            alpha: 0.1,
            target_backlog: 0.0,
            update_period_ms: 10.0,
        }
    }
}

impl RemParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key, reason: String| Err(ConfigError::Invalid { key, reason });
        if !(self.gamma > 0.0) {
            return bad("aqm.rem.gamma", format!("must be positive, got {}", self.gamma));
        }
        if !(self.phi > 1.0) {
            return bad("aqm.rem.phi", format!("must exceed 1, got {}", self.phi));
        }
        if !(self.alpha > 0.0) {
            return bad("aqm.rem.alpha", format!("must be positive, got {}", self.alpha));
        }
        if !(self.target_backlog >= 0.0) {
            return bad(
                "aqm.rem.target_backlog",
                format!("must be nonnegative, got {}", self.target_backlog),
            );
        }
        if !(self.update_period_ms > 0.0) {
            return bad(
                "aqm.rem.update_period_ms",
                format!("must be positive, got {}", self.update_period_ms),
            );
        }
        Ok(())
    }

    pub fn update_period_s(&self) -> f64 {
        self.update_period_ms / 1e3
    }
}

/// Drop probability for a given price.
pub fn rem_mark_prob(price: f64, phi: f64) -> f64 {
    1.0 - phi.powf(-price)
}

/// One price step. Rates are converted to packets per update period by
/// dividing by `8 * mean_pkt_bytes / period`, which makes the rate term
/// commensurate with the backlog term.
pub fn rem_price_update(
    price: f64,
    params: &RemParams,
    backlog_pkts: f64,
    input_bps: f64,
    capacity_bps: f64,
    mean_pkt_bytes: u32,
) -> f64 {
    let normalizer = 8.0 * mean_pkt_bytes as f64 / params.update_period_s();
    let backlog_term = params.alpha * (backlog_pkts - params.target_backlog);
    let rate_term = (input_bps - capacity_bps) / normalizer;
    (price + params.gamma * (backlog_term + rate_term)).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemState {
    pub params: RemParams,
    pub price: f64,
    /// Bytes offered since the last price update, dropped ones included.
    pub arrived_since_update: u64,
    pub last_update: SimTime,
}

impl RemState {
    pub fn new(params: RemParams) -> Self {
        RemState {
            params,
            price: 0.0,
            arrived_since_update: 0,
            last_update: SimTime::ZERO,
        }
    }

    pub fn update_price(
        &mut self,
        backlog_pkts: f64,
        input_bps: f64,
        capacity_bps: f64,
        mean_pkt_bytes: u32,
    ) {
        self.price = rem_price_update(
            self.price,
            &self.params,
            backlog_pkts,
            input_bps,
            capacity_bps,
            mean_pkt_bytes,
        );
    }

    pub fn drop_probability(&self) -> f64 {
        rem_mark_prob(self.price, self.params.phi)
    }
}

#[derive(Debug)]
pub struct Rem {
    state: RemState,
    link: LinkContext,
    period: SimTime,
    backlog_bytes: u64,
    q: VecDeque<Packet>,
}

impl Rem {
    pub fn new(params: RemParams, link: LinkContext) -> Self {
        let period = SimTime::from_secs_f64(params.update_period_s())
            .expect("validated period is positive");
        Rem {
            state: RemState::new(params),
            link,
            period,
            backlog_bytes: 0,
            q: VecDeque::new(),
        }
    }

    pub fn state(&self) -> &RemState {
        &self.state
    }

    /// Runs every price update whose period boundary is at or before `now`.
    /// The backlog is constant between queue events, so the current length
    /// is the right sample for each elapsed boundary.
    fn catch_up(&mut self, now: SimTime) {
        let period_s = self.params().update_period_s();
        while self.state.last_update + self.period <= now {
            let input_bps = self.state.arrived_since_update as f64 * 8.0 / period_s;
            self.state.update_price(
                self.q.len() as f64,
                input_bps,
                self.link.rate_bps,
                self.link.mean_pkt_bytes,
            );
            self.state.arrived_since_update = 0;
            self.state.last_update = self.state.last_update + self.period;
            if self.state.price == 0.0 && self.q.is_empty() {
                // Idle at zero price: further empty periods are no-ops.
                let periods = (now - self.state.last_update).as_nanos() / self.period.as_nanos();
                self.state.last_update =
                    self.state.last_update + SimTime::from_nanos(periods * self.period.as_nanos());
            }
        }
    }

    fn params(&self) -> &RemParams {
        &self.state.params
    }
}

impl QueueDiscipline for Rem {
    fn enqueue(&mut self, pkt: Packet, now: SimTime, rng: &mut RandomSource) -> Admission {
        self.catch_up(now);
        self.state.arrived_since_update += pkt.size_bytes as u64;
        let early = rng.chance(self.state.drop_probability());
        let fits = self.backlog_bytes + pkt.size_bytes as u64 <= self.link.buffer_bytes;
        if early || !fits {
            return Admission::rejected(pkt);
        }
        self.backlog_bytes += pkt.size_bytes as u64;
        self.q.push_back(pkt);
        Admission::accepted()
    }

    fn dequeue(&mut self, now: SimTime) -> Option<Packet> {
        self.catch_up(now);
        let pkt = self.q.pop_front()?;
        self.backlog_bytes -= pkt.size_bytes as u64;
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
        DisciplineKind::Rem
    }
}
