//! Command-line entry points: headless `run` and live `serve`.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error (bad flags, no tick count) |
//! | 3 | file could not be read or written |
//! | 4 | config or scenario failed to parse |
//! | 5 | config violates a world invariant |
//! | 6 | server could not bind its port |

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::control::{LiveOptions, LiveSim, Server};
use crate::metrics::MetricsSeries;
use crate::scenario::{parse_config, parse_scenario_with_base, ParseError, RunError, Scenario, ScenarioPlan};
use crate::world::{SimConfig, WorldError};

#[derive(Debug, Parser)]
#[command(name = "sitesim", version, about = "Multi-site agent-based epidemic simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub mode: Mode,
}

#[derive(Debug, Subcommand)]
pub enum Mode {
    /// Run a scenario headlessly and write its metrics.
    Run(RunArgs),
    /// Run live, controlled over WebSocket.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Default)]
pub struct WorldArgs {
    /// Config JSON; unspecified fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scenario JSON with scheduled switch events.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    /// Ticks to run; overrides the scenario's total_ticks.
    #[arg(long)]
    pub ticks: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    /// Port to listen on; 0 picks a free one.
    #[arg(long)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Ticks between snapshots; defaults to 1 for up to 500 agents.
    #[arg(long)]
    pub snapshot_interval: Option<u64>,
    /// Ticks per second; 0 runs unthrottled.
    #[arg(long, default_value_t = 20.0)]
    pub tick_rate: f64,
    /// Metrics file written on exit.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Directory holding the operator console bundle.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Start with the loop paused.
    #[arg(long)]
    pub paused: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse { source: ParseError::Invalid(_), .. } => 5,
            CliError::Parse { .. } => 4,
            CliError::Invalid(_) => 5,
            CliError::Bind { .. } => 6,
        }
    }
}

impl From<WorldError> for CliError {
    fn from(e: WorldError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

/// Resolves `--config`, `--scenario` and `--seed` into a runnable plan.
pub fn load_plan(args: &WorldArgs) -> Result<ScenarioPlan, CliError> {
    let base = match &args.config {
        Some(path) => parse_config(&read(path)?).map_err(|source| CliError::Parse { path: path.clone(), source })?,
        None => SimConfig::default(),
    };
    let scenario = match &args.scenario {
        Some(path) => parse_scenario_with_base(&read(path)?, &base)
            .map_err(|source| CliError::Parse { path: path.clone(), source })?,
        None => Scenario { description: None, seed: 0, total_ticks: None, config: Default::default(), events: vec![] },
    };
    let mut plan = scenario.plan(&base).map_err(|source| CliError::Parse {
        path: args.scenario.clone().unwrap_or_default(),
        source,
    })?;
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    Ok(plan)
}

pub fn write_series(series: &MetricsSeries, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let write = |w: &mut dyn Write| match format {
        Format::Csv => series.write_csv(w),
        Format::Json => series.write_json(w),
    };
    match out {
        Some(path) => {
            let io_err = |source| CliError::Io { path: path.to_owned(), source };
            let file = fs::File::create(path).map_err(io_err)?;
            let mut w = io::BufWriter::new(file);
            write(&mut w).map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// Runs a scenario to completion and writes its metrics.
pub fn run_headless(args: &RunArgs) -> Result<MetricsSeries, CliError> {
    let plan = load_plan(&args.world)?;
    let ticks = args
        .ticks
        .or(plan.total_ticks)
        .ok_or_else(|| CliError::Usage("run needs --ticks or a scenario with total_ticks".into()))?;
    let series = plan.run(ticks)?.into_parts().1;
    write_series(&series, args.format, args.out.as_deref())?;
    Ok(series)
}

pub fn live_options(args: &ServeArgs) -> Result<LiveOptions, CliError> {
    if !(args.tick_rate.is_finite() && args.tick_rate >= 0.0) {
        return Err(CliError::Usage(format!("--tick-rate must be >= 0, got {}", args.tick_rate)));
    }
    let plan = load_plan(&args.world)?;
    let mut opts = LiveOptions::new(plan.config.clone(), plan.seed);
    if let Some(n) = args.snapshot_interval {
        if n == 0 {
            return Err(CliError::Usage("--snapshot-interval must be >= 1".into()));
        }
        opts.snapshot_interval = n;
    }
    opts.tick_rate = args.tick_rate;
    opts.start_paused = args.paused;
    opts.scenario = Some(plan);
    Ok(opts)
}

/// Serves until SIGINT, then flushes metrics to `--out`.
pub async fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let live = LiveSim::new(live_options(args)?).map_err(|e| CliError::Invalid(e.to_string()))?;
    let addr = SocketAddr::new(args.host, args.port);
    let server = Server::start(live, addr, args.ui_dir.clone())
        .await
        .map_err(|source| CliError::Bind { addr, source })?;
    println!("listening on http://{}", server.addr);
    let _ = io::stdout().flush();

    let _ = tokio::signal::ctrl_c().await;
    let live = server.shutdown().await;
    if let Some(out) = &args.out {
        write_series(live.simulation().series(), args.format, Some(out))?;
    }
    Ok(())
}
