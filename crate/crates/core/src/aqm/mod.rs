//! Queue disciplines behind a common enqueue/dequeue interface.
//!
//! Every discipline keeps `backlog_bytes() <= buffer_bytes()` at all times.
//! A packet counts toward the backlog from admission until it is dequeued
//! for transmission; the packet on the wire is not part of the queue.

mod droptail;
mod red;
mod rem;
mod sfq;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use droptail::{droptail_verdict, DropTail};
pub use red::{red_avg_update, red_drop_decision, red_idle_decay, Red, RedParams, RedState};
pub use rem::{rem_mark_prob, rem_price_update, Rem, RemParams, RemState};
pub use sfq::{sfq_classify, FlowKey, Sfq, SfqParams};

use crate::error::ConfigError;
use crate::packet::Packet;
use crate::sim::{RandomSource, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Drop,
}

/// Result of offering a packet to a queue.
#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    /// Whether the arriving packet is now queued.
    pub admitted: bool,
    /// Packets removed by this arrival. When `admitted` is false the
    /// arriving packet is the last entry; any earlier entries were already
    /// queued and are evicted.
    pub dropped: Vec<Packet>,
}

impl Admission {
    pub fn accepted() -> Self {
        Admission {
            admitted: true,
            dropped: Vec::new(),
        }
    }

    pub fn rejected(pkt: Packet) -> Self {
        Admission {
            admitted: false,
            dropped: vec![pkt],
        }
    }

    /// Packets that were queued before this arrival and got pushed out.
    pub fn evicted(&self) -> &[Packet] {
        if self.admitted {
            &self.dropped
        } else {
            &self.dropped[..self.dropped.len() - 1]
        }
    }
}

/// Link properties a discipline may need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkContext {
    pub rate_bps: f64,
    pub buffer_bytes: u64,
    /// Typical packet size, used to convert idle time and rates to packets.
    pub mean_pkt_bytes: u32,
}

impl LinkContext {
    /// Seconds needed to serialize one typical packet.
    pub fn packet_time_s(&self) -> f64 {
        self.mean_pkt_bytes as f64 * 8.0 / self.rate_bps
    }
}

pub trait QueueDiscipline: Send {
    fn enqueue(&mut self, pkt: Packet, now: SimTime, rng: &mut RandomSource) -> Admission;
    fn dequeue(&mut self, now: SimTime) -> Option<Packet>;
    fn backlog_bytes(&self) -> u64;
    fn backlog_packets(&self) -> usize;
    fn buffer_bytes(&self) -> u64;
    fn kind(&self) -> DisciplineKind;

    fn is_empty(&self) -> bool {
        self.backlog_packets() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisciplineKind {
    DropTail,
    Red,
    Sfq,
    Rem,
}

impl DisciplineKind {
    pub const ALL: [DisciplineKind; 4] = [
        DisciplineKind::DropTail,
        DisciplineKind::Red,
        DisciplineKind::Sfq,
        DisciplineKind::Rem,
    ];

    /// The three disciplines compared at the bottleneck.
    pub const COMPARED: [DisciplineKind; 3] =
        [DisciplineKind::Red, DisciplineKind::Sfq, DisciplineKind::Rem];

    pub fn as_str(self) -> &'static str {
        match self {
            DisciplineKind::DropTail => "droptail",
            DisciplineKind::Red => "red",
            DisciplineKind::Sfq => "sfq",
            DisciplineKind::Rem => "rem",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DisciplineKind::DropTail => "DropTail",
            DisciplineKind::Red => "RED",
            DisciplineKind::Sfq => "SFQ",
            DisciplineKind::Rem => "REM",
        }
    }
}

impl fmt::Display for DisciplineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DisciplineKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.to_ascii_lowercase().as_str() {
            "droptail" | "drop-tail" | "fifo" => Ok(DisciplineKind::DropTail),
            "red" => Ok(DisciplineKind::Red),
            "sfq" => Ok(DisciplineKind::Sfq),
            "rem" => Ok(DisciplineKind::Rem),
            _ => Err(ConfigError::UnknownDiscipline(s.to_string())),
        }
    }
}

/// Parameters for every discipline; only the selected one is used.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisciplineParams {
    pub red: RedParams,
    pub rem: RemParams,
    pub sfq: SfqParams,
}

impl DisciplineParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.red.validate()?;
        self.rem.validate()?;
        self.sfq.validate()
    }
}

pub fn build_discipline(
    kind: DisciplineKind,
    params: &DisciplineParams,
    link: LinkContext,
) -> Box<dyn QueueDiscipline> {
    match kind {
        DisciplineKind::DropTail => Box::new(DropTail::new(link.buffer_bytes)),
        DisciplineKind::Red => Box::new(Red::new(params.red, link)),
        DisciplineKind::Sfq => Box::new(Sfq::new(params.sfq, link.buffer_bytes)),
        DisciplineKind::Rem => Box::new(Rem::new(params.rem, link)),
    }
}
