//! ns-2 style ASCII trace: one 12-field line per queue or link event.
//!
//! ```text
//! event time from to type size flags fid src dst seq id
//! r 1.3556 3 2 ack 40 ------- 1 3.0 0.0 15 201
//! ```
//!
//! The emitter always writes seven dashes in the flags column; the parser
//! accepts any run of one to seven dashes.

use std::fmt::{self, Write as _};
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use crate::error::ParseError;
use crate::packet::{Addr, NodeId, Packet, PacketKind};
use crate::sim::SimTime;

const FLAGS: &str = "-------";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Enqueue,
    Dequeue,
    Receive,
    Drop,
}

impl TraceEvent {
    pub fn code(self) -> char {
        match self {
            TraceEvent::Enqueue => '+',
            TraceEvent::Dequeue => '-',
            TraceEvent::Receive => 'r',
            TraceEvent::Drop => 'd',
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        match s {
            "+" => Some(TraceEvent::Enqueue),
            "-" => Some(TraceEvent::Dequeue),
            "r" => Some(TraceEvent::Receive),
            "d" => Some(TraceEvent::Drop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub event: TraceEvent,
    /// Microsecond-granular; see [`SimTime::round_to_micros`].
    pub time: SimTime,
    pub from_node: NodeId,
    pub to_node: NodeId,
    pub pkt_type: PacketKind,
    pub pkt_size: u32,
    pub fid: u32,
    pub src_addr: Addr,
    pub dst_addr: Addr,
    pub seq_num: i64,
    pub pkt_id: u64,
}

impl TraceRecord {
    /// Builds the record for `pkt` crossing the hop `from -> to`.
    pub fn for_packet(
        event: TraceEvent,
        time: SimTime,
        from_node: NodeId,
        to_node: NodeId,
        pkt: &Packet,
    ) -> Self {
        TraceRecord {
            event,
            time: time.round_to_micros(),
            from_node,
            to_node,
            pkt_type: pkt.kind,
            pkt_size: pkt.size_bytes,
            fid: pkt.flow_id,
            src_addr: pkt.src,
            dst_addr: pkt.dst,
            seq_num: pkt.seq,
            pkt_id: pkt.id,
        }
    }
}

/// Seconds with at most six fractional digits and no trailing zeros.
pub fn format_time(t: SimTime) -> String {
    let us = t.round_to_micros().as_nanos() / 1_000;
    let (secs, frac) = (us / 1_000_000, us % 1_000_000);
    if frac == 0 {
        return secs.to_string();
    }
    let digits = format!("{frac:06}");
    format!("{secs}.{}", digits.trim_end_matches('0'))
}

fn parse_time(s: &str) -> Option<SimTime> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    let simple = !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.len() <= 9
        && frac.bytes().all(|b| b.is_ascii_digit());
    if simple {
        let secs: u64 = int.parse().ok()?;
        let mut nanos = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            nanos += (b - b'0') as u64 * 10u64.pow(8 - i as u32);
        }
        return secs.checked_mul(1_000_000_000)?.checked_add(nanos).map(SimTime::from_nanos);
    }
    // exponent notation and the like
    let v: f64 = s.parse().ok()?;
    SimTime::from_secs_f64(v).ok()
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {} {} {} {} {} {}",
            self.event.code(),
            format_time(self.time),
            self.from_node,
            self.to_node,
            self.pkt_type,
            self.pkt_size,
            FLAGS,
            self.fid,
            self.src_addr,
            self.dst_addr,
            self.seq_num,
            self.pkt_id
        )
    }
}

/// One trace line, without the trailing newline.
pub fn format_record(record: &TraceRecord) -> String {
    let mut s = String::with_capacity(64);
    write!(s, "{record}").expect("writing to a String cannot fail");
    s
}

fn num<T: FromStr>(line: usize, field: &'static str, value: &str) -> Result<T, ParseError> {
    value.parse().map_err(|_| ParseError::BadNumber {
        line,
        field,
        value: value.to_string(),
    })
}

fn addr(line: usize, value: &str) -> Result<Addr, ParseError> {
    value.parse().map_err(|_| ParseError::BadAddress {
        line,
        value: value.to_string(),
    })
}

/// Parses one line; `line_no` is only used in errors.
pub fn parse_record_at(line: &str, line_no: usize) -> Result<TraceRecord, ParseError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 12 {
        return Err(ParseError::FieldCount {
            line: line_no,
            found: fields.len(),
        });
    }
    let event = TraceEvent::from_code(fields[0]).ok_or_else(|| ParseError::UnknownEvent {
        line: line_no,
        code: fields[0].to_string(),
    })?;
    let time = parse_time(fields[1]).ok_or_else(|| ParseError::BadNumber {
        line: line_no,
        field: "time",
        value: fields[1].to_string(),
    })?;
    let pkt_type = fields[4]
        .parse::<PacketKind>()
        .map_err(|_| ParseError::UnknownPacketType {
            line: line_no,
            token: fields[4].to_string(),
        })?;
    let flags = fields[6];
    if flags.is_empty() || flags.len() > 7 || !flags.bytes().all(|b| b == b'-') {
        return Err(ParseError::BadFlags {
            line: line_no,
            value: flags.to_string(),
        });
    }
    Ok(TraceRecord {
        event,
        time,
        from_node: num(line_no, "from node", fields[2])?,
        to_node: num(line_no, "to node", fields[3])?,
        pkt_type,
        pkt_size: num(line_no, "pkt size", fields[5])?,
        fid: num(line_no, "fid", fields[7])?,
        src_addr: addr(line_no, fields[8])?,
        dst_addr: addr(line_no, fields[9])?,
        seq_num: num(line_no, "seq num", fields[10])?,
        pkt_id: num(line_no, "pkt id", fields[11])?,
    })
}

pub fn parse_record(line: &str) -> Result<TraceRecord, ParseError> {
    parse_record_at(line, 1)
}

/// Lazy line-by-line reader. Blank lines are skipped.
pub struct TraceReader<R> {
    input: R,
    buf: String,
    line_no: usize,
    check_order: bool,
    last_time: Option<SimTime>,
    failed: bool,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(input: R) -> Self {
        TraceReader {
            input,
            buf: String::new(),
            line_no: 0,
            check_order: false,
            last_time: None,
            failed: false,
        }
    }

    /// Reject records whose time precedes the previous record.
    pub fn check_order(mut self, yes: bool) -> Self {
        self.check_order = yes;
        self
    }

    pub fn line_number(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TraceRecord, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(ParseError::Io {
                        line: self.line_no,
                        message: e.to_string(),
                    }));
                }
            }
            if self.buf.trim().is_empty() {
                continue;
            }
            let rec = match parse_record_at(&self.buf, self.line_no) {
                Ok(r) => r,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            };
            if self.check_order {
                if let Some(prev) = self.last_time {
                    if rec.time < prev {
                        self.failed = true;
                        return Some(Err(ParseError::TimeWentBackwards {
                            line: self.line_no,
                            time: rec.time,
                            previous: prev,
                        }));
                    }
                }
                self.last_time = Some(rec.time);
            }
            return Some(Ok(rec));
        }
    }
}

pub fn stream_trace<R: BufRead>(input: R) -> TraceReader<R> {
    TraceReader::new(input)
}

/// Consumer of simulator trace records.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

impl<T: TraceSink + ?Sized> TraceSink for &mut T {
    fn record(&mut self, rec: &TraceRecord) {
        (**self).record(rec)
    }
}

impl<A: TraceSink, B: TraceSink> TraceSink for (A, B) {
    fn record(&mut self, rec: &TraceRecord) {
        self.0.record(rec);
        self.1.record(rec);
    }
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, rec: &TraceRecord) {
        self.push(*rec);
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _rec: &TraceRecord) {}
}

/// Writes newline-terminated trace lines. The first I/O error is kept and
/// reported by [`TraceWriter::finish`]; later records are discarded.
pub struct TraceWriter<W: Write> {
    out: W,
    error: Option<io::Error>,
    lines: u64,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter {
            out,
            error: None,
            lines: 0,
        }
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for TraceWriter<W> {
    fn record(&mut self, rec: &TraceRecord) {
        if self.error.is_some() {
            return;
        }
        match writeln!(self.out, "{rec}") {
            Ok(()) => self.lines += 1,
            Err(e) => self.error = Some(e),
        }
    }
}
