//! Stochastic Fair Queuing: flows hash into FIFO buckets served round-robin.
//! The hash salt (perturbation) is redrawn every `perturb_period_s`; packets
//! already queued stay in the bucket they were classified into. On overflow
//! the longest bucket sheds its most recent packet.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Admission, DisciplineKind, QueueDiscipline};
use crate::error::ConfigError;
use crate::packet::{Addr, Packet};
use crate::sim::{RandomSource, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SfqParams {
    pub buckets: usize,
    pub perturb_period_s: f64,
}

impl Default for SfqParams {
    fn default() -> Self {
        SfqParams {
            buckets: 16,
            perturb_period_s: 5.0,
        }
    }
}

impl SfqParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.buckets == 0 {
            return Err(ConfigError::Invalid {
                key: "aqm.sfq.buckets",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.perturb_period_s > 0.0) {
            return Err(ConfigError::Invalid {
                key: "aqm.sfq.perturb_period_s",
                reason: format!("must be positive, got {}", self.perturb_period_s),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlowKey {
    pub src: Addr,
    pub dst: Addr,
    pub flow_id: u32,
}

impl FlowKey {
    pub fn of(pkt: &Packet) -> Self {
        FlowKey {
            src: pkt.src,
            dst: pkt.dst,
            flow_id: pkt.flow_id,
        }
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bucket index for a flow under a given perturbation.
pub fn sfq_classify(key: FlowKey, perturbation: u64, n_buckets: usize) -> usize {
    assert!(n_buckets >= 1);
    let mut h = mix(perturbation);
    for word in [
        ((key.src.node as u64) << 32) | key.src.port as u64,
        ((key.dst.node as u64) << 32) | key.dst.port as u64,
        key.flow_id as u64,
    ] {
        h = mix(h ^ word);
    }
    (h % n_buckets as u64) as usize
}

#[derive(Debug)]
pub struct Sfq {
    params: SfqParams,
    buffer_bytes: u64,
    buckets: Vec<VecDeque<Packet>>,
    backlog_bytes: u64,
    backlog_packets: usize,
    rr_cursor: usize,
    perturbation: u64,
    epoch: Option<u64>,
}

impl Sfq {
    pub fn new(params: SfqParams, buffer_bytes: u64) -> Self {
        Sfq {
            params,
            buffer_bytes,
            buckets: vec![VecDeque::new(); params.buckets],
            backlog_bytes: 0,
            backlog_packets: 0,
            rr_cursor: 0,
            perturbation: 0,
            epoch: None,
        }
    }

    pub fn perturbation(&self) -> u64 {
        self.perturbation
    }

    pub fn bucket_len(&self, idx: usize) -> usize {
        self.buckets[idx].len()
    }

    fn refresh_perturbation(&mut self, now: SimTime, rng: &mut RandomSource) {
        let epoch = (now.as_secs_f64() / self.params.perturb_period_s).floor() as u64;
        if self.epoch != Some(epoch) {
            self.epoch = Some(epoch);
            self.perturbation = rng.draw_u64();
        }
    }

    /// Longest bucket counting the arrival as already appended to `arrival`.
    /// Ties go to the arrival's bucket, then to the lowest index.
    fn longest(&self, arrival: usize) -> usize {
        let mut best = arrival;
        let mut best_len = self.buckets[arrival].len() + 1;
        for (i, b) in self.buckets.iter().enumerate() {
            if i != arrival && b.len() > best_len {
                best = i;
                best_len = b.len();
            }
        }
        best
    }

    fn push(&mut self, idx: usize, pkt: Packet) {
        self.backlog_bytes += pkt.size_bytes as u64;
        self.backlog_packets += 1;
        self.buckets[idx].push_back(pkt);
    }

    fn pop_back(&mut self, idx: usize) -> Packet {
        let pkt = self.buckets[idx].pop_back().expect("longest bucket is nonempty");
        self.backlog_bytes -= pkt.size_bytes as u64;
        self.backlog_packets -= 1;
        pkt
    }
}

impl QueueDiscipline for Sfq {
    fn enqueue(&mut self, pkt: Packet, now: SimTime, rng: &mut RandomSource) -> Admission {
        self.refresh_perturbation(now, rng);
        let idx = sfq_classify(FlowKey::of(&pkt), self.perturbation, self.buckets.len());
        let mut dropped = Vec::new();
        while self.backlog_bytes + pkt.size_bytes as u64 > self.buffer_bytes {
            let victim = self.longest(idx);
            if victim == idx {
                dropped.push(pkt);
                return Admission {
                    admitted: false,
                    dropped,
                };
            }
            dropped.push(self.pop_back(victim));
        }
        self.push(idx, pkt);
        Admission {
            admitted: true,
            dropped,
        }
    }

    fn dequeue(&mut self, _now: SimTime) -> Option<Packet> {
        if self.backlog_packets == 0 {
            return None;
        }
        let n = self.buckets.len();
        for step in 0..n {
            let idx = (self.rr_cursor + step) % n;
            if let Some(pkt) = self.buckets[idx].pop_front() {
                self.backlog_bytes -= pkt.size_bytes as u64;
                self.backlog_packets -= 1;
                self.rr_cursor = (idx + 1) % n;
                return Some(pkt);
            }
        }
        unreachable!("backlog_packets > 0 but every bucket is empty")
    }

    fn backlog_bytes(&self) -> u64 {
        self.backlog_bytes
    }

    fn backlog_packets(&self) -> usize {
        self.backlog_packets
    }

    fn buffer_bytes(&self) -> u64 {
        self.buffer_bytes
    }

    fn kind(&self) -> DisciplineKind {
        DisciplineKind::Sfq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::test_packet;

    fn key(src: u32, dst: u32, fid: u32) -> FlowKey {
        FlowKey {
            src: Addr::new(src, 0),
            dst: Addr::new(dst, 0),
            flow_id: fid,
        }
    }

    /// Finds two flow ids landing in distinct buckets under `perturbation`.
    fn distinct_flows(sfq: &Sfq) -> (u32, u32) {
        let n = sfq.buckets.len();
        let b = |f: u32| sfq_classify(FlowKey::of(&test_packet(0, f, 1)), sfq.perturbation, n);
        let a = 1;
        let other = (2..100).find(|&f| b(f) != b(a)).unwrap();
        (a, other)
    }

    #[test]
    fn classify_is_deterministic() {
        let k = key(0, 7, 1);
        assert_eq!(sfq_classify(k, 99, 16), sfq_classify(k, 99, 16));
    }

    #[test]
    fn single_bucket_takes_everything() {
        for f in 0..50 {
            assert_eq!(sfq_classify(key(f, f + 7, f), 12345, 1), 0);
        }
    }

    #[test]
    fn balance_over_random_keys() {
        let mut rng = RandomSource::new(1);
        let mut load = [0usize; 16];
        let n = 10_000;
        for _ in 0..n {
            let v = rng.draw_u64();
            let k = key(v as u32, (v >> 32) as u32, (v >> 16) as u32);
            load[sfq_classify(k, 77, 16)] += 1;
        }
        let mean = n as f64 / 16.0;
        let max = *load.iter().max().unwrap() as f64;
        assert!(max <= 3.0 * mean, "{load:?}");
    }

    #[test]
    fn empty_buffer_accepts() {
        let mut rng = RandomSource::default();
        let mut q = Sfq::new(SfqParams::default(), 4000);
        let adm = q.enqueue(test_packet(0, 1, 2000), SimTime::ZERO, &mut rng);
        assert!(adm.admitted && adm.dropped.is_empty());
        assert_eq!(q.backlog_packets(), 1);
    }

    #[test]
    fn arrival_in_longest_bucket_is_shed() {
        let mut rng = RandomSource::default();
        let mut q = Sfq::new(SfqParams::default(), 4000);
        for id in 0..2 {
            assert!(q.enqueue(test_packet(id, 1, 2000), SimTime::ZERO, &mut rng).admitted);
        }
        let adm = q.enqueue(test_packet(2, 1, 2000), SimTime::ZERO, &mut rng);
        assert!(!adm.admitted);
        assert_eq!(adm.dropped.iter().map(|p| p.id).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn strictly_longer_bucket_is_shed_and_arrival_admitted() {
        let mut rng = RandomSource::default();
        let mut q = Sfq::new(SfqParams::default(), 4000);
        q.refresh_perturbation(SimTime::ZERO, &mut rng);
        let (a, b) = distinct_flows(&q);
        // Flow a holds the whole buffer; flow b arrives.
        q.enqueue(test_packet(0, a, 2000), SimTime::ZERO, &mut rng);
        q.enqueue(test_packet(1, a, 2000), SimTime::ZERO, &mut rng);
        let adm = q.enqueue(test_packet(2, b, 2000), SimTime::ZERO, &mut rng);
        assert!(adm.admitted);
        assert_eq!(adm.evicted().iter().map(|p| p.id).collect::<Vec<_>>(), vec![1]);
        let order: Vec<_> = std::iter::from_fn(|| q.dequeue(SimTime::ZERO))
            .map(|p| p.id)
            .collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 2]);
    }

    #[test]
    fn round_robin_service() {
        let mut rng = RandomSource::default();
        let mut q = Sfq::new(SfqParams::default(), 100_000);
        q.refresh_perturbation(SimTime::ZERO, &mut rng);
        let (a, b) = distinct_flows(&q);
        let n = q.buckets.len();
        let ba = sfq_classify(FlowKey::of(&test_packet(0, a, 1)), q.perturbation, n);
        let bb = sfq_classify(FlowKey::of(&test_packet(0, b, 1)), q.perturbation, n);
        // A = [p1, p2], B = [p3], with A the earlier bucket in scan order.
        let (fa, fb) = if ba < bb { (a, b) } else { (b, a) };
        q.enqueue(test_packet(1, fa, 100), SimTime::ZERO, &mut rng);
        q.enqueue(test_packet(2, fa, 100), SimTime::ZERO, &mut rng);
        q.enqueue(test_packet(3, fb, 100), SimTime::ZERO, &mut rng);
        let order: Vec<_> = std::iter::from_fn(|| q.dequeue(SimTime::ZERO))
            .map(|p| p.id)
            .collect();
        assert_eq!(order, vec![1, 3, 2]);
    }

    #[test]
    fn single_bucket_is_fifo() {
        let mut rng = RandomSource::default();
        let params = SfqParams {
            buckets: 1,
            ..SfqParams::default()
        };
        let mut q = Sfq::new(params, 100_000);
        for id in 0..5 {
            q.enqueue(test_packet(id, (id % 3) as u32, 500), SimTime::ZERO, &mut rng);
        }
        let order: Vec<_> = std::iter::from_fn(|| q.dequeue(SimTime::ZERO))
            .map(|p| p.id)
            .collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn all_empty_dequeues_nothing() {
        let mut q = Sfq::new(SfqParams::default(), 4000);
        assert!(q.dequeue(SimTime::ZERO).is_none());
    }

    #[test]
    fn perturbation_changes_per_epoch() {
        let mut rng = RandomSource::default();
        let mut q = Sfq::new(SfqParams::default(), 4000);
        q.refresh_perturbation(SimTime::ZERO, &mut rng);
        let p0 = q.perturbation();
        q.refresh_perturbation(SimTime::from_millis(4999), &mut rng);
        assert_eq!(q.perturbation(), p0);
        q.refresh_perturbation(SimTime::from_millis(5000), &mut rng);
        assert_ne!(q.perturbation(), p0);
    }
}
