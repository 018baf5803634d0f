//! Parsing a large trace must not hold more than a handful of records.

use std::alloc::{GlobalAlloc, Layout, System};
use std::io::{self, BufReader, Read};
use std::sync::atomic::{AtomicUsize, Ordering};

use aqmlab::trace::stream_trace;

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Generates `total` trace lines on demand.
struct Synthetic {
    next: u64,
    total: u64,
    line: Vec<u8>,
    pos: usize,
}

impl Read for Synthetic {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.pos == self.line.len() {
            if self.next == self.total {
                return Ok(0);
            }
            let i = self.next;
            self.next += 1;
            let ev = ["+", "-", "r", "d"][(i % 4) as usize];
            self.line.clear();
            use std::io::Write;
            writeln!(
                self.line,
                "{ev} {}.{:06} {} {} tcp 2000 ------- 1 0.0 7.0 {i} {i}",
                i / 10_000,
                (i % 10_000) * 100,
                i % 12,
                (i + 1) % 12
            )?;
            self.pos = 0;
        }
        let n = buf.len().min(self.line.len() - self.pos);
        buf[..n].copy_from_slice(&self.line[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

#[test]
fn million_lines_stream_in_constant_memory() {
    const N: u64 = 1_000_000;
    let input = BufReader::new(Synthetic {
        next: 0,
        total: N,
        line: Vec::with_capacity(128),
        pos: 0,
    });
    let base = LIVE.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);

    let mut count = 0u64;
    let mut last = None;
    for rec in stream_trace(input).check_order(true) {
        let rec = rec.unwrap();
        assert_eq!(rec.pkt_id, count);
        last = Some(rec.time);
        count += 1;
    }
    assert_eq!(count, N);
    assert_eq!(last.unwrap().as_nanos(), (N - 1) / 10_000 * 1_000_000_000 + (N - 1) % 10_000 * 100_000);

    let growth = PEAK.load(Ordering::Relaxed) - base;
    // A million records would need tens of megabytes if they were retained.
    assert!(growth < 64 * 1024, "peak heap growth {growth} bytes");
}
