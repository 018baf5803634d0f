//! Discrete-event engine: simulation clock, time-ordered event queue and the
//! run-level random source.
//!
//! Events with equal timestamps fire in insertion order, so a run is fully
//! determined by its configuration and seed.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

/// Simulation time in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    /// Converts fractional seconds, rounding to the nearest nanosecond.
    /// Negative or non-finite inputs are rejected.
    pub fn from_secs_f64(s: f64) -> Result<Self, SimError> {
        if !s.is_finite() || s < 0.0 {
            return Err(SimError::InvalidTime(s));
        }
        Ok(SimTime((s * 1e9).round() as u64))
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    /// Rounds to the nearest microsecond (half away from zero), the
    /// resolution of the ASCII trace.
    pub fn round_to_micros(self) -> SimTime {
        SimTime((self.0 + 500) / 1_000 * 1_000)
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs_f64())
    }
}

/// Handle returned by [`Scheduler::schedule`]; used to cancel timers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Entry<E> {
    at: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; reverse so the earliest (at, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Time-ordered event queue with a monotone clock.
pub struct Scheduler<E> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Entry<E>>,
    cancelled: HashSet<u64>,
    processed: u64,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            processed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events handed to a handler so far.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    /// Number of live (not cancelled) pending events.
    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn schedule(&mut self, at: SimTime, event: E) -> Result<EventHandle, SimError> {
        if at < self.now {
            return Err(SimError::ScheduleInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { at, seq, event });
        Ok(EventHandle(seq))
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, event)
            .expect("a nonnegative delay never lands in the past")
    }

    /// Cancels a pending event. Returns false if it already fired or was
    /// cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq {
            return false;
        }
        if !self.heap.iter().any(|e| e.seq == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0)
    }

    /// Pops the next live event at or before `until`, advancing the clock.
    pub fn pop_until(&mut self, until: SimTime) -> Option<(SimTime, E)> {
        loop {
            let top = self.heap.peek()?;
            if top.at > until {
                return None;
            }
            let entry = self.heap.pop().expect("peeked");
            if self.cancelled.remove(&entry.seq) {
                continue;
            }
            debug_assert!(entry.at >= self.now);
            self.now = entry.at;
            self.processed += 1;
            return Some((entry.at, entry.event));
        }
    }

    /// Processes every event with `at <= until` in (time, insertion) order,
    /// then sets the clock to `until`. Returns the number of events handled
    /// by this call.
    pub fn run<F>(&mut self, until: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        let before = self.processed;
        while let Some((at, event)) = self.pop_until(until) {
            handler(self, at, event);
        }
        if until > self.now {
            self.now = until;
        }
        self.processed - before
    }
}

/// Seeded uniform source shared by every stochastic decision of a run.
///
/// ChaCha8 is used because its output stream is specified independently of
/// platform and word size.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw on [0, 1).
    pub fn draw_uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn draw_u64(&mut self) -> u64 {
        self.rng.gen::<u64>()
    }

    /// Bernoulli trial; `p <= 0` never fires and `p >= 1` always fires,
    /// but a draw is consumed either way so the stream stays aligned.
    pub fn chance(&mut self, p: f64) -> bool {
        self.draw_uniform() < p
    }
}

impl Default for RandomSource {
    fn default() -> Self {
        Self::new(Self::DEFAULT_SEED)
    }
}
