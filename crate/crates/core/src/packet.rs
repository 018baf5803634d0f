use std::fmt;
use std::str::FromStr;

use crate::sim::SimTime;

/// Packet type as it appears in the trace `pkt type` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Tcp,
    Ack,
    Cbr,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Tcp => "tcp",
            PacketKind::Ack => "ack",
            PacketKind::Cbr => "cbr",
        }
    }

    /// Data-carrying kinds (everything except ACKs).
    pub fn is_data(self) -> bool {
        !matches!(self, PacketKind::Ack)
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PacketKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "tcp" => Ok(PacketKind::Tcp),
            "ack" => Ok(PacketKind::Ack),
            "cbr" => Ok(PacketKind::Cbr),
            _ => Err(()),
        }
    }
}

pub type NodeId = u32;

/// `node.port` agent address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Addr {
    pub node: NodeId,
    pub port: u32,
}

impl Addr {
    pub const fn new(node: NodeId, port: u32) -> Self {
        Addr { node, port }
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.node, self.port)
    }
}

impl FromStr for Addr {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let (node, port) = s.split_once('.').ok_or(())?;
        Ok(Addr {
            node: node.parse().map_err(|_| ())?,
            port: port.parse().map_err(|_| ())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    /// Unique per run; retransmissions get a fresh id.
    pub id: u64,
    pub flow_id: u32,
    pub kind: PacketKind,
    pub size_bytes: u32,
    /// Data sequence number, or the cumulative ACK number (-1 before the
    /// first in-order segment arrives).
    pub seq: i64,
    pub src: Addr,
    pub dst: Addr,
    pub created_at: SimTime,
}

/// Hands out run-unique packet ids.
#[derive(Debug, Default)]
pub struct PacketIds(u64);

impl PacketIds {
    pub fn next_id(&mut self) -> u64 {
        let id = self.0;
        self.0 += 1;
        id
    }
}

#[cfg(test)]
pub(crate) fn test_packet(id: u64, flow_id: u32, size_bytes: u32) -> Packet {
    Packet {
        id,
        flow_id,
        kind: PacketKind::Tcp,
        size_bytes,
        seq: id as i64,
        src: Addr::new(flow_id, 0),
        dst: Addr::new(100 + flow_id, 0),
        created_at: SimTime::ZERO,
    }
}
