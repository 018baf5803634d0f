use std::collections::VecDeque;

use super::{Admission, DisciplineKind, QueueDiscipline, Verdict};
use crate::packet::Packet;
use crate::sim::{RandomSource, SimTime};

/// Accept iff the packet fits in the remaining buffer.
pub fn droptail_verdict(backlog_bytes: u64, size_bytes: u32, buffer_bytes: u64) -> Verdict {
    if backlog_bytes + size_bytes as u64 <= buffer_bytes {
        Verdict::Accept
    } else {
        Verdict::Drop
    }
}

/// Byte-limited FIFO.
#[derive(Debug)]
pub struct DropTail {
    buffer_bytes: u64,
    backlog_bytes: u64,
    q: VecDeque<Packet>,
}

impl DropTail {
    pub fn new(buffer_bytes: u64) -> Self {
        DropTail {
            buffer_bytes,
            backlog_bytes: 0,
            q: VecDeque::new(),
        }
    }
}

impl QueueDiscipline for DropTail {
    fn enqueue(&mut self, pkt: Packet, _now: SimTime, _rng: &mut RandomSource) -> Admission {
        match droptail_verdict(self.backlog_bytes, pkt.size_bytes, self.buffer_bytes) {
            Verdict::Accept => {
                self.backlog_bytes += pkt.size_bytes as u64;
                self.q.push_back(pkt);
                Admission::accepted()
            }
            Verdict::Drop => Admission::rejected(pkt),
        }
    }

    fn dequeue(&mut self, _now: SimTime) -> Option<Packet> {
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
        self.buffer_bytes
    }

    fn kind(&self) -> DisciplineKind {
        DisciplineKind::DropTail
    }
}
