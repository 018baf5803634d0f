use std::io;

use thiserror::Error;

use crate::sim::SimTime;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("cannot schedule an event at {at} before the current clock {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
    #[error("invalid time value {0}")]
    InvalidTime(f64),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("unknown queue discipline `{0}` (valid: droptail, red, sfq, rem)")]
    UnknownDiscipline(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: expected 12 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: unknown event code `{code}`")]
    UnknownEvent { line: usize, code: String },
    #[error("line {line}: unknown packet type `{token}`")]
    UnknownPacketType { line: usize, token: String },
    #[error("line {line}: field `{field}` is not a valid number: `{value}`")]
    BadNumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: malformed address `{value}` (expected node.port)")]
    BadAddress { line: usize, value: String },
    #[error("line {line}: malformed flags field `{value}`")]
    BadFlags { line: usize, value: String },
    #[error("line {line}: time {time} precedes previous record at {previous}")]
    TimeWentBackwards {
        line: usize,
        time: SimTime,
        previous: SimTime,
    },
    #[error("line {line}: read error: {message}")]
    Io { line: usize, message: String },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("lost packets ({lost}) exceed sent packets ({sent})")]
    LostExceedsSent { sent: u64, lost: u64 },
    #[error("packet {pkt_id} received at node {node} without a prior send")]
    UnmatchedReceive { pkt_id: u64, node: u32 },
    #[error("queue {from}->{to} backlog went negative at {time}")]
    NegativeBacklog { from: u32, to: u32, time: SimTime },
    #[error("window must be positive, got {0}")]
    BadWindow(f64),
    #[error("report `{name}`: {reason}")]
    BadReport { name: String, reason: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
