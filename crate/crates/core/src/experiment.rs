//! Compositions of simulation and analysis: single runs, bandwidth sweeps and
//! cross-algorithm comparisons.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::aqm::DisciplineKind;
use crate::config::ScenarioConfig;
use crate::error::{ConfigError, Error, MetricsError, Result};
use crate::metrics::{
    rank_algorithms, render_comparison, AnalysisParams, Analyzer, MetricsReport, RankingTable,
    ReportSummary,
};
use crate::scenario::{run_scenario, RunSummary};
use crate::trace::{stream_trace, TraceWriter};

/// Simulation output analyzed in the same pass.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub run: RunSummary,
    pub report: MetricsReport,
}

fn label_for(cfg: &ScenarioConfig) -> String {
    cfg.bottleneck.aqm.label().to_string()
}

/// Runs `cfg` and analyzes the trace on the fly without storing it.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut analyzer = Analyzer::new(AnalysisParams::for_scenario(cfg, label_for(cfg)))?;
    let run = run_scenario(cfg, &mut analyzer)?;
    let report = analyzer.finish()?;
    Ok(Outcome { run, report })
}

/// Runs `cfg`, writing the trace to `out` and analyzing it in the same pass.
pub fn simulate_with_trace<W: Write>(cfg: &ScenarioConfig, out: W) -> Result<Outcome> {
    let mut analyzer = Analyzer::new(AnalysisParams::for_scenario(cfg, label_for(cfg)))?;
    let mut writer = TraceWriter::new(out);
    let run = run_scenario(cfg, (&mut writer, &mut analyzer))?;
    writer.finish()?;
    let report = analyzer.finish()?;
    Ok(Outcome { run, report })
}

/// Parses and analyzes a trace stream in one pass.
pub fn analyze_trace<R: BufRead>(input: R, params: AnalysisParams) -> Result<MetricsReport> {
    crate::metrics::analyze_records(stream_trace(input).map(|r| r.map_err(Error::from)), params)
}

/// One bandwidth-sweep data point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub rate_mbps: f64,
    pub loss_rate_pct: f64,
    pub utilization_pct: f64,
    pub max_throughput_mbps: f64,
}

/// Runs `cfg` once per bottleneck rate, in parallel, with the same seed for
/// every run. Rows come back in the order the rates were given.
pub fn sweep(cfg: &ScenarioConfig, rates_mbps: &[f64]) -> Result<Vec<SweepRow>> {
    if rates_mbps.is_empty() {
        return Err(ConfigError::Invalid {
            key: "rates",
            reason: "at least one rate is required".into(),
        }
        .into());
    }
    if let Some(bad) = rates_mbps.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(ConfigError::Invalid {
            key: "rates",
            reason: format!("rate {bad} must be positive"),
        }
        .into());
    }
    rates_mbps
        .par_iter()
        .map(|&rate| {
            let c = cfg.with_bottleneck_rate_mbps(rate);
            c.validate()?;
            let out = simulate(&c)?;
            log::info!(
                "sweep {} at {rate} Mbps: loss {:.4}%",
                c.bottleneck.aqm.as_str(),
                out.report.loss_ratio_pct
            );
            Ok(SweepRow {
                rate_mbps: rate,
                loss_rate_pct: out.report.loss_ratio_pct,
                utilization_pct: out.report.utilization_pct,
                max_throughput_mbps: out.report.throughput.max_mbps,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rate_mbps",
        "loss_rate_pct",
        "utilization_pct",
        "max_throughput_mbps",
    ])?;
    for r in rows {
        w.write_record([
            r.rate_mbps.to_string(),
            r.loss_rate_pct.to_string(),
            r.utilization_pct.to_string(),
            r.max_throughput_mbps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the same scenario under each discipline, in parallel.
pub fn run_disciplines(cfg: &ScenarioConfig, kinds: &[DisciplineKind]) -> Result<Vec<Outcome>> {
    kinds
        .par_iter()
        .map(|&k| simulate(&cfg.with_aqm(k)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub reports: Vec<ReportSummary>,
    pub ranking: RankingTable,
    /// Scenario mismatches between reports; the comparison still proceeds.
    pub warnings: Vec<String>,
}

impl Comparison {
    pub fn render_text(&self) -> String {
        let mut out = render_comparison(&self.reports);
        out.push('\n');
        out.push_str(&self.ranking.render_text());
        out
    }
}

/// Combines reports into a side-by-side matrix and a ranking.
pub fn compare(reports: Vec<ReportSummary>) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(MetricsError::BadReport {
            name: reports.first().map(|r| r.label.clone()).unwrap_or_default(),
            reason: "at least two reports are needed for a comparison".into(),
        }
        .into());
    }
    let mut warnings = Vec::new();
    let base = &reports[0];
    for r in &reports[1..] {
        match (base.fingerprint, r.fingerprint) {
            (Some(a), Some(b)) => {
                if a.duration_s != b.duration_s {
                    warnings.push(format!(
                        "`{}` ran for {} s but `{}` ran for {} s",
                        base.label, a.duration_s, r.label, b.duration_s
                    ));
                }
                if a.packet_size_bytes != b.packet_size_bytes {
                    warnings.push(format!(
                        "`{}` used {}-byte packets but `{}` used {}-byte packets",
                        base.label, a.packet_size_bytes, r.label, b.packet_size_bytes
                    ));
                }
                if a.link_rate_bps != b.link_rate_bps {
                    warnings.push(format!(
                        "`{}` had a {} bps bottleneck but `{}` had {} bps",
                        base.label, a.link_rate_bps, r.label, b.link_rate_bps
                    ));
                }
            }
            _ => warnings.push(format!(
                "cannot check that `{}` and `{}` describe the same scenario",
                base.label, r.label
            )),
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let ranking = rank_algorithms(&reports);
    Ok(Comparison {
        reports,
        ranking,
        warnings,
    })
}
