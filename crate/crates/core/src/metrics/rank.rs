//! Letter-grade ranking of algorithms across the headline metrics.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;

use super::ReportSummary;
use crate::error::Error;

/// Letter grade; `A` is best. Ties share the better grade and the next
/// distinct value skips ahead (competition ranking), so three algorithms
/// with distinct values get exactly `A`, `B`, `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grade(u8);

impl Grade {
    pub const A: Grade = Grade(0);
    pub const B: Grade = Grade(1);
    pub const C: Grade = Grade(2);

    pub fn from_rank(rank: usize) -> Self {
        Grade(rank.min(25) as u8)
    }

    pub fn rank(self) -> usize {
        self.0 as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankMetric {
    Delay,
    QueueLength,
    Throughput,
    LossRate,
}

impl RankMetric {
    pub const ALL: [RankMetric; 4] = [
        RankMetric::Delay,
        RankMetric::QueueLength,
        RankMetric::Throughput,
        RankMetric::LossRate,
    ];

    pub fn title(self) -> &'static str {
        match self {
            RankMetric::Delay => "Delay",
            RankMetric::QueueLength => "Queue Length",
            RankMetric::Throughput => "Throughput",
            RankMetric::LossRate => "Loss Rate",
        }
    }

    /// Orders two reports so that the better one comes first.
    fn compare(self, a: &ReportSummary, b: &ReportSummary) -> Ordering {
        // Missing values sort last.
        fn asc(a: Option<f64>, b: Option<f64>) -> Ordering {
            match (a, b) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            }
        }
        match self {
            RankMetric::Delay => asc(a.delay_max_ms, b.delay_max_ms),
            // The queue metric is coarse (the buffer holds two packets), so
            // equal means and maxima fall back to the delay they induce.
            RankMetric::QueueLength => asc(a.queue_mean_pkts, b.queue_mean_pkts)
                .then(a.queue_max_pkts.total_cmp(&b.queue_max_pkts))
                .then(asc(a.delay_max_ms, b.delay_max_ms)),
            RankMetric::Throughput => b.throughput_max_mbps.total_cmp(&a.throughput_max_mbps),
            RankMetric::LossRate => a.loss_ratio_pct.total_cmp(&b.loss_ratio_pct),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub algorithms: Vec<String>,
    /// `grades[i][m]` is algorithm `i`'s grade on `RankMetric::ALL[m]`.
    pub grades: Vec<[Grade; 4]>,
}

impl RankingTable {
    pub fn grade(&self, algorithm: &str, metric: RankMetric) -> Option<Grade> {
        let i = self.algorithms.iter().position(|a| a == algorithm)?;
        let m = RankMetric::ALL.iter().position(|&x| x == metric)?;
        Some(self.grades[i][m])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["algorithm"];
        header.extend(RankMetric::ALL.iter().map(|m| m.title()));
        w.write_record(&header)?;
        for (name, g) in self.algorithms.iter().zip(&self.grades) {
            let mut row = vec![name.clone()];
            row.extend(g.iter().map(|g| g.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn render_text(&self) -> String {
        let name_w = self
            .algorithms
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("Algorithm".len());
        let mut out = format!("{:name_w$}", "Algorithm");
        for m in RankMetric::ALL {
            out.push_str(&format!("  {:>12}", m.title()));
        }
        out.push('\n');
        for (name, g) in self.algorithms.iter().zip(&self.grades) {
            out.push_str(&format!("{name:name_w$}"));
            for g in g {
                out.push_str(&format!("  {:>12}", g.to_string()));
            }
            out.push('\n');
        }
        out
    }
}

/// Grades every report on each metric. Rows keep the input order; grades
/// do not depend on it.
pub fn rank_algorithms(reports: &[ReportSummary]) -> RankingTable {
    let n = reports.len();
    let mut grades = vec![[Grade::A; 4]; n];
    for (m, metric) in RankMetric::ALL.iter().enumerate() {
        for i in 0..n {
            let better = (0..n)
                .filter(|&j| metric.compare(&reports[j], &reports[i]) == Ordering::Less)
                .count();
            grades[i][m] = Grade::from_rank(better);
        }
    }
    RankingTable {
        algorithms: reports.iter().map(|r| r.label.clone()).collect(),
        grades,
    }
}
