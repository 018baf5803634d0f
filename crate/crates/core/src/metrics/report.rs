//! Scalar report form: CSV (`metric,min,max,value`) and the text table.

use std::fmt::Write as _;
use std::io::{Read, Write};

use super::{Fingerprint, MetricsReport};
use crate::error::{Error, MetricsError};

/// Scalar view of a [`MetricsReport`]; this is what gets written to and read
/// back from report CSV files. Delays are in milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub label: String,
    pub sent_packets: u64,
    pub lost_packets: u64,
    pub loss_ratio_pct: f64,
    pub drop_events: u64,
    pub throughput_min_mbps: f64,
    pub throughput_max_mbps: f64,
    pub throughput_mean_mbps: f64,
    pub delay_min_ms: Option<f64>,
    pub delay_max_ms: Option<f64>,
    pub delay_mean_ms: Option<f64>,
    pub data_delay_min_ms: Option<f64>,
    pub data_delay_max_ms: Option<f64>,
    pub ack_delay_min_ms: Option<f64>,
    pub ack_delay_max_ms: Option<f64>,
    pub queue_min_pkts: f64,
    pub queue_max_pkts: f64,
    /// Time-weighted mean; absent when only extremes are known.
    pub queue_mean_pkts: Option<f64>,
    pub utilization_pct: f64,
    pub delay_throughput: Option<f64>,
    pub fingerprint: Option<Fingerprint>,
}

fn ms(v: f64) -> f64 {
    v * 1e3
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ReportSummary {
    /// Summary with only the headline values filled in; the rest are zero
    /// or absent.
    pub fn bare(label: impl Into<String>) -> Self {
        ReportSummary {
            label: label.into(),
            sent_packets: 0,
            lost_packets: 0,
            loss_ratio_pct: 0.0,
            drop_events: 0,
            throughput_min_mbps: 0.0,
            throughput_max_mbps: 0.0,
            throughput_mean_mbps: 0.0,
            delay_min_ms: None,
            delay_max_ms: None,
            delay_mean_ms: None,
            data_delay_min_ms: None,
            data_delay_max_ms: None,
            ack_delay_min_ms: None,
            ack_delay_max_ms: None,
            queue_min_pkts: 0.0,
            queue_max_pkts: 0.0,
            queue_mean_pkts: None,
            utilization_pct: 0.0,
            delay_throughput: None,
            fingerprint: None,
        }
    }

    pub fn from_report(r: &MetricsReport) -> Self {
        ReportSummary {
            label: r.label.clone(),
            sent_packets: r.sent_packets,
            lost_packets: r.lost_packets,
            loss_ratio_pct: r.loss_ratio_pct,
            drop_events: r.drop_events,
            throughput_min_mbps: r.throughput.min_mbps,
            throughput_max_mbps: r.throughput.max_mbps,
            throughput_mean_mbps: r.throughput.mean_mbps,
            delay_min_ms: r.delay.all.map(|e| ms(e.min)),
            delay_max_ms: r.delay.all.map(|e| ms(e.max)),
            delay_mean_ms: r.delay.mean_s.map(ms),
            data_delay_min_ms: r.delay.data.map(|e| ms(e.min)),
            data_delay_max_ms: r.delay.data.map(|e| ms(e.max)),
            ack_delay_min_ms: r.delay.ack.map(|e| ms(e.min)),
            ack_delay_max_ms: r.delay.ack.map(|e| ms(e.max)),
            queue_min_pkts: r.queue.min as f64,
            queue_max_pkts: r.queue.max as f64,
            queue_mean_pkts: Some(r.queue.time_mean),
            utilization_pct: r.utilization_pct,
            delay_throughput: Some(r.delay_throughput),
            fingerprint: Some(r.fingerprint),
        }
    }

    fn rows(&self) -> Vec<[String; 4]> {
        let row = |name: &str, min: Option<f64>, max: Option<f64>, value: String| {
            [name.to_string(), cell(min), cell(max), value]
        };
        let mut rows = vec![
            row("label", None, None, self.label.clone()),
            row("sent_packets", None, None, self.sent_packets.to_string()),
            row("lost_packets", None, None, self.lost_packets.to_string()),
            row("loss_ratio_pct", None, None, self.loss_ratio_pct.to_string()),
            row("drop_events", None, None, self.drop_events.to_string()),
            row(
                "throughput_mbps",
                Some(self.throughput_min_mbps),
                Some(self.throughput_max_mbps),
                self.throughput_mean_mbps.to_string(),
            ),
            row("delay_ms", self.delay_min_ms, self.delay_max_ms, cell(self.delay_mean_ms)),
            row(
                "data_delay_ms",
                self.data_delay_min_ms,
                self.data_delay_max_ms,
                String::new(),
            ),
            row("ack_delay_ms", self.ack_delay_min_ms, self.ack_delay_max_ms, String::new()),
            row(
                "queue_length_pkts",
                Some(self.queue_min_pkts),
                Some(self.queue_max_pkts),
                cell(self.queue_mean_pkts),
            ),
            row("utilization_pct", None, None, self.utilization_pct.to_string()),
            row("delay_throughput", None, None, cell(self.delay_throughput)),
        ];
        if let Some(fp) = self.fingerprint {
            rows.push(row("duration_s", None, None, fp.duration_s.to_string()));
            rows.push(row(
                "packet_size_bytes",
                None,
                None,
                fp.packet_size_bytes.to_string(),
            ));
            rows.push(row("link_rate_bps", None, None, fp.link_rate_bps.to_string()));
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "min", "max", "value"])?;
        for r in self.rows() {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parses a report CSV. `default_label` is used when no `label` row is
    /// present.
    pub fn read_csv<R: Read>(input: R, default_label: &str) -> Result<Self, Error> {
        let bad = |reason: String| MetricsError::BadReport {
            name: default_label.to_string(),
            reason,
        };
        let mut s = ReportSummary::bare(default_label);
        let mut duration = None;
        let mut pkt = None;
        let mut rate = None;
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["metric", "min", "max", "value"] {
            return Err(bad("header must be metric,min,max,value".into()).into());
        }
        for rec in rdr.records() {
            let rec = rec?;
            let name = &rec[0];
            let opt = |i: usize| -> Result<Option<f64>, MetricsError> {
                let v = rec[i].trim();
                if v.is_empty() {
                    return Ok(None);
                }
                v.parse::<f64>()
                    .map(Some)
                    .map_err(|_| bad(format!("`{name}`: `{v}` is not a number")))
            };
            let req = |i: usize| -> Result<f64, MetricsError> {
                opt(i)?.ok_or_else(|| bad(format!("`{name}` is missing a value")))
            };
            match name {
                "label" => s.label = rec[3].to_string(),
                "sent_packets" => s.sent_packets = req(3)? as u64,
                "lost_packets" => s.lost_packets = req(3)? as u64,
                "loss_ratio_pct" => s.loss_ratio_pct = req(3)?,
                "drop_events" => s.drop_events = req(3)? as u64,
                "throughput_mbps" => {
                    s.throughput_min_mbps = opt(1)?.unwrap_or(0.0);
                    s.throughput_max_mbps = req(2)?;
                    s.throughput_mean_mbps = opt(3)?.unwrap_or(0.0);
                }
                "delay_ms" => {
                    s.delay_min_ms = opt(1)?;
                    s.delay_max_ms = opt(2)?;
                    s.delay_mean_ms = opt(3)?;
                }
                "data_delay_ms" => {
                    s.data_delay_min_ms = opt(1)?;
                    s.data_delay_max_ms = opt(2)?;
                }
                "ack_delay_ms" => {
                    s.ack_delay_min_ms = opt(1)?;
                    s.ack_delay_max_ms = opt(2)?;
                }
                "queue_length_pkts" => {
                    s.queue_min_pkts = opt(1)?.unwrap_or(0.0);
                    s.queue_max_pkts = req(2)?;
                    s.queue_mean_pkts = opt(3)?;
                }
                "utilization_pct" => s.utilization_pct = req(3)?,
                "delay_throughput" => s.delay_throughput = opt(3)?,
                "duration_s" => duration = Some(req(3)?),
                "packet_size_bytes" => pkt = Some(req(3)? as u32),
                "link_rate_bps" => rate = Some(req(3)?),
                other => return Err(bad(format!("unknown metric `{other}`")).into()),
            }
        }
        if let (Some(duration_s), Some(packet_size_bytes), Some(link_rate_bps)) =
            (duration, pkt, rate)
        {
            s.fingerprint = Some(Fingerprint {
                duration_s,
                packet_size_bytes,
                link_rate_bps,
            });
        }
        Ok(s)
    }

    /// Plain-text summary of one report.
    pub fn render_text(&self) -> String {
        render_comparison(std::slice::from_ref(self))
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

/// Side-by-side table in the layout of the comparative results matrix:
/// queue length, throughput, delay, sent/lost packets, loss ratio,
/// utilization.
pub fn render_comparison(reports: &[ReportSummary]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let mut add = |name: &str, f: &dyn Fn(&ReportSummary) -> String| {
        rows.push((name.to_string(), reports.iter().map(f).collect()));
    };
    add("Queue length  Max.", &|r| format!("{}", r.queue_max_pkts));
    add("              Min.", &|r| format!("{}", r.queue_min_pkts));
    add("              Mean", &|r| fmt_opt(r.queue_mean_pkts, 3));
    add("Throughput    Max.", &|r| format!("{:.2}", r.throughput_max_mbps));
    add("              Min.", &|r| format!("{:.2}", r.throughput_min_mbps));
    add("Delay (ms)    Max.", &|r| fmt_opt(r.delay_max_ms, 2));
    add("              Min.", &|r| fmt_opt(r.delay_min_ms, 2));
    add("Send Packets", &|r| r.sent_packets.to_string());
    add("Lost Packets", &|r| r.lost_packets.to_string());
    add("Average Loss Ratio (%)", &|r| format!("{:.4}", r.loss_ratio_pct));
    add("Utilization (%)", &|r| format!("{:.2}", r.utilization_pct));

    let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(19);
    let col_w = reports
        .iter()
        .map(|r| r.label.len())
        .chain(rows.iter().flat_map(|r| r.1.iter().map(|c| c.len())))
        .max()
        .unwrap_or(0)
        + 2;
    let mut out = String::new();
    let _ = write!(out, "{:name_w$}", "Performance Metrics");
    for r in reports {
        let _ = write!(out, "{:>col_w$}", r.label);
    }
    out.push('\n');
    for (name, cells) in rows {
        let _ = write!(out, "{name:name_w$}");
        for c in cells {
            let _ = write!(out, "{c:>col_w$}");
        }
        out.push('\n');
    }
    out
}
