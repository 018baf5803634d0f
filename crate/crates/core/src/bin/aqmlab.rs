use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aqmlab::config::ScenarioConfig;
use aqmlab::error::{ConfigError, Error};
use aqmlab::experiment::{self, SweepRow};
use aqmlab::metrics::{AnalysisParams, ReportSummary};
use aqmlab::packet::NodeId;
use aqmlab::DisciplineKind;

#[derive(Parser)]
#[command(name = "aqmlab", version, about = "Dumbbell AQM simulator and trace analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML); omitted keys take the default scenario values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Queue discipline at the bottleneck: droptail, red, sfq or rem.
    #[arg(long)]
    aqm: Option<DisciplineKind>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(a) = self.aqm {
            cfg = cfg.with_aqm(a);
        }
        if let Some(s) = self.seed {
            cfg = cfg.with_seed(s);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trace output path; `-` writes to stdout.
        #[arg(long, short)]
        out: PathBuf,
        /// Also write the metrics report CSV here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute metrics from a trace file.
    Analyze {
        /// Trace path; `-` reads stdin.
        trace: PathBuf,
        /// Scenario file supplying link rate, packet size and duration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bottleneck queue as FROM:TO node ids (default: the dumbbell routers).
        #[arg(long, value_parser = parse_pair)]
        bottleneck: Option<(NodeId, NodeId)>,
        /// Throughput averaging window in seconds.
        #[arg(long, default_value_t = 1.0)]
        window_s: f64,
        /// Analysis horizon; defaults to the scenario duration.
        #[arg(long)]
        duration_s: Option<f64>,
        /// Report label; defaults to the trace file stem.
        #[arg(long)]
        label: Option<String>,
        /// Report CSV output path.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the scenario at several bottleneck rates.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated rates in Mbps.
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        /// CSV output path; defaults to stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compare report CSVs side by side and rank them.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
        /// Ranking CSV output path.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the default scenario as TOML.
    Defaults,
}

fn parse_pair(s: &str) -> Result<(NodeId, NodeId), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected FROM:TO, got `{s}`"))?;
    let n = |x: &str| x.trim().parse::<NodeId>().map_err(|e| format!("`{x}`: {e}"));
    Ok((n(a)?, n(b)?))
}

fn create(path: &Path) -> Result<Box<dyn Write>, Error> {
    if path == Path::new("-") {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            report,
        } => {
            let cfg = scenario.load()?;
            let outcome = experiment::simulate_with_trace(&cfg, create(&out)?)?;
            let r = &outcome.report;
            if let Some(p) = report {
                r.summary().write_csv(create(&p)?)?;
            }
            eprintln!(
                "{}: sent {} lost {} loss {:.4}% utilization {:.2}% ({} events)",
                r.label,
                r.sent_packets,
                r.lost_packets,
                r.loss_ratio_pct,
                r.utilization_pct,
                outcome.run.events
            );
        }
        Command::Analyze {
            trace,
            config,
            bottleneck,
            window_s,
            duration_s,
            label,
            out,
        } => {
            let cfg = match config {
                Some(p) => ScenarioConfig::load(&p)?,
                None => ScenarioConfig::default(),
            };
            let label = label.unwrap_or_else(|| {
                trace
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .filter(|s| s != "-")
                    .unwrap_or_else(|| "trace".into())
            });
            let mut params = AnalysisParams::for_scenario(&cfg, label);
            params.window_s = window_s;
            if let Some(b) = bottleneck {
                params.bottleneck = b;
            }
            if let Some(d) = duration_s {
                params.duration_s = Some(d);
            }
            let report = if trace == Path::new("-") {
                experiment::analyze_trace(io::stdin().lock(), params)?
            } else {
                let f = File::open(&trace).map_err(|e| {
                    io::Error::new(e.kind(), format!("{}: {e}", trace.display()))
                })?;
                experiment::analyze_trace(BufReader::new(f), params)?
            };
            let summary = report.summary();
            if let Some(p) = out {
                summary.write_csv(create(&p)?)?;
            }
            print!("{}", summary.render_text());
            println!("drop events: {}", report.drop_events);
        }
        Command::Sweep {
            scenario,
            rates,
            out,
        } => {
            let cfg = scenario.load()?;
            let rows: Vec<SweepRow> = experiment::sweep(&cfg, &rates)?;
            let w: Box<dyn Write> = match out {
                Some(p) => create(&p)?,
                None => Box::new(io::stdout().lock()),
            };
            experiment::write_sweep_csv(&rows, w)?;
        }
        Command::Compare { reports, out } => {
            let mut summaries = Vec::with_capacity(reports.len());
            for p in &reports {
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let f = File::open(p)
                    .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
                summaries.push(ReportSummary::read_csv(BufReader::new(f), &stem)?);
            }
            let cmp = experiment::compare(summaries)?;
            for w in &cmp.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", cmp.render_text());
            if let Some(p) = out {
                cmp.ranking.write_csv(create(&p)?)?;
            }
        }
        Command::Defaults => {
            print!("{}", ScenarioConfig::default().to_toml_string());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AQMLAB_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Surface the list of valid disciplines for a bad --aqm value.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Config(ConfigError::Parse(_)) = e {
                eprintln!("hint: `aqmlab defaults` prints every accepted key");
            }
            ExitCode::FAILURE
        }
    }
}
