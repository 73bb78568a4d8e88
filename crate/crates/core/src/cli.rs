//! Command-line interface: `simulate`, `run`, `compare-policies`, `serve`
//! and `report`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 corrupt log.

use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::decision::compare_policies;
use crate::domain::Step;
use crate::engine::log::{read_log, LogWriter};
use crate::engine::replay::resume;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::report::LogReport;
use crate::scenario::Scenario;
use crate::service::{self, AppState};

/// Name accepted by `--scenario` for the scenario compiled into the binary.
pub const BUILTIN_SCENARIO: &str = "railyard-default";

#[derive(Debug, Parser)]
#[command(
    name = "cbm",
    version,
    about = "Condition-based maintenance engine for simulated railway assets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Ndjson,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario from step 0 to the horizon and write its event log.
    Simulate {
        /// Scenario file (.toml or .json), or `railyard-default`.
        #[arg(long, default_value = BUILTIN_SCENARIO)]
        scenario: String,
        /// Overrides the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's horizon.
        #[arg(long)]
        horizon: Option<Step>,
        /// Output log; overwritten if present.
        #[arg(long)]
        out: PathBuf,
    },
    /// Advance a scenario, appending to a log. With --resume, an existing
    /// log is replayed first and the run continues where it stopped.
    Run {
        #[arg(long, default_value = BUILTIN_SCENARIO)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<Step>,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        resume: bool,
        /// Stop after this step instead of the horizon.
        #[arg(long)]
        until: Option<Step>,
    },
    /// Evaluate corrective-only, time-based and condition-based maintenance
    /// over several seeds.
    ComparePolicies {
        #[arg(long, default_value = BUILTIN_SCENARIO)]
        scenario: String,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Serve the HTTP/JSON API and event stream while ticking the engine.
    /// An existing log is replayed and continued.
    Serve {
        #[arg(long, default_value = BUILTIN_SCENARIO)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Wall-clock milliseconds per simulation step.
        #[arg(long, default_value_t = 1000)]
        tick_ms: u64,
    },
    /// Summarize an event log.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

/// Loads a scenario file, or the built-in one by name.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    if spec == BUILTIN_SCENARIO {
        return Ok(Scenario::railyard_default());
    }
    Ok(Scenario::from_path(spec)?)
}

fn scenario_with(spec: &str, seed: Option<u64>, horizon: Option<Step>) -> Result<Scenario> {
    let mut sc = load_scenario(spec)?;
    if let Some(s) = seed {
        sc = sc.with_seed(s);
    }
    if let Some(h) = horizon {
        sc = sc.with_horizon(h);
    }
    sc.validate()?;
    Ok(sc)
}

fn is_nonempty(path: &Path) -> bool {
    std::fs::metadata(path).is_ok_and(|m| m.len() > 0)
}

fn simulate(sc: Scenario, out_path: &Path, out: &mut dyn Write) -> Result<()> {
    let mut engine = Engine::new(sc)?;
    let mut writer = LogWriter::create(out_path)?;
    while !engine.finished() {
        let events = engine.tick()?;
        writer.append_all(&events)?;
    }
    writer.flush()?;
    writeln!(
        out,
        "wrote {} events over {} steps to {}; cost {:.3}",
        engine.last_seq(),
        engine.clock(),
        out_path.display(),
        engine.cumulative_cost()
    )?;
    Ok(())
}

fn run(sc: Scenario, log: &Path, resume_log: bool, until: Option<Step>, out: &mut dyn Write) -> Result<()> {
    if !resume_log && is_nonempty(log) {
        return Err(Error::Usage(format!(
            "{} already holds events; pass --resume to continue it",
            log.display()
        )));
    }
    let r = resume(sc, log)?;
    let (mut engine, mut writer) = (r.engine, r.writer);
    if r.discarded > 0 {
        writeln!(out, "dropped {} events of an unfinished tick", r.discarded)?;
    }
    let start = engine.clock();
    let stop = until.unwrap_or(Step::MAX).min(engine.scenario().horizon_steps);
    while engine.clock() < stop {
        let events = engine.tick()?;
        writer.append_all(&events)?;
    }
    writer.flush()?;
    writeln!(
        out,
        "steps {start}..{}; log {} now holds {} events; cost {:.3}",
        engine.clock(),
        log.display(),
        engine.last_seq(),
        engine.cumulative_cost()
    )?;
    Ok(())
}

fn compare(sc: Scenario, seeds: u64, format: Format, out: &mut dyn Write) -> Result<()> {
    if seeds == 0 {
        return Err(Error::Usage("--seeds must be at least 1".into()));
    }
    let reports = compare_policies(&sc, seeds)?;
    match format {
        Format::Ndjson => {
            for r in &reports {
                writeln!(out, "{}", serde_json::to_string(r).expect("report serializes"))?;
            }
        }
        Format::Text => {
            writeln!(
                out,
                "{:<16} {:>5} {:>10} {:>9} {:>10} {:>9} {:>8} {:>9} {:>11}",
                "policy",
                "seeds",
                "mean_cost",
                "unplanned",
                "preventive",
                "emergency",
                "inspect",
                "downtime",
                "mean_spares"
            )?;
            for r in &reports {
                writeln!(
                    out,
                    "{:<16} {:>5} {:>10.3} {:>9} {:>10} {:>9} {:>8} {:>9} {:>11.3}",
                    r.policy.as_str(),
                    r.seeds,
                    r.mean_total_cost,
                    r.unplanned_failures,
                    r.preventive_count,
                    r.emergency_count,
                    r.inspections,
                    r.downtime_steps,
                    r.mean_spare_stock
                )?;
            }
            let stock = |k| reports.iter().find(|r| r.policy == k).map(|r| r.mean_spare_stock);
            use crate::decision::PolicyKind::{ConditionBased, CorrectiveOnly};
            if let (Some(cb), Some(co)) = (stock(ConditionBased), stock(CorrectiveOnly)) {
                if co > 0.0 {
                    writeln!(
                        out,
                        "spare stock, condition_based vs corrective_only: {:+.1}%",
                        100.0 * (cb - co) / co
                    )?;
                }
            }
        }
    }
    Ok(())
}

async fn serve_cmd(sc: Scenario, log: &Path, addr: SocketAddr, tick: Duration) -> Result<()> {
    let r = resume(sc, log)?;
    if r.discarded > 0 {
        tracing::warn!(discarded = r.discarded, "log had an unfinished tick");
    }
    let history = r.records.into_iter().zip(r.lines).collect();
    let state = AppState::new(r.engine, Some(r.writer), history);
    service::serve(state, addr, tick).await
}

fn report(log: &Path, format: Format, out: &mut dyn Write) -> Result<()> {
    if !log.exists() {
        return Err(Error::Usage(format!("{} does not exist", log.display())));
    }
    let contents = read_log(log)?;
    let r = LogReport::from_records(&contents.records);
    match format {
        Format::Text => write!(out, "{}", r.to_text())?,
        Format::Ndjson => write!(out, "{}", r.to_ndjson())?,
    }
    if contents.torn_line {
        writeln!(out, "note: the final line was incomplete and was ignored")?;
    }
    Ok(())
}

/// Runs one parsed command, writing human output to `out`.
pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate {
            scenario,
            seed,
            horizon,
            out: path,
        } => simulate(scenario_with(&scenario, seed, horizon)?, &path, out),
        Command::Run {
            scenario,
            seed,
            horizon,
            log,
            resume,
            until,
        } => run(scenario_with(&scenario, seed, horizon)?, &log, resume, until, out),
        Command::ComparePolicies {
            scenario,
            seeds,
            format,
        } => compare(scenario_with(&scenario, None, None)?, seeds, format, out),
        Command::Serve {
            scenario,
            seed,
            log,
            port,
            bind,
            tick_ms,
        } => {
            let sc = scenario_with(&scenario, seed, None)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve_cmd(
                sc,
                &log,
                SocketAddr::new(bind, port),
                Duration::from_millis(tick_ms.max(1)),
            ))
        }
        Command::Report { log, format } => report(&log, format, out),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli.command, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
