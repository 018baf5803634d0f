//! Discrete-event simulation of a TCP dumbbell network for comparing active
//! queue management disciplines (DropTail, RED, SFQ, REM).
//!
//! The pipeline is: a [`config::ScenarioConfig`] drives
//! [`scenario::run_scenario`], which streams ns-2 style
//! [`trace::TraceRecord`]s into any [`trace::TraceSink`]; a
//! [`metrics::Analyzer`] turns a record stream into a
//! [`metrics::MetricsReport`], and [`metrics::rank_algorithms`] grades a set
//! of reports against each other. [`experiment`] bundles the common
//! compositions.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aqm;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod packet;
pub mod scenario;
pub mod sim;
pub mod topology;
pub mod trace;

pub use aqm::{DisciplineKind, QueueDiscipline};
pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use metrics::{AnalysisParams, Analyzer, MetricsReport, ReportSummary};
pub use scenario::{run_scenario, RunSummary};
pub use sim::{RandomSource, Scheduler, SimTime};
pub use trace::{TraceRecord, TraceSink};
