use std::fs;
use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use engage::config::{ConfigError, EngineConfig};
use engage::simulator::{run_scenario, Scenario, ScenarioError, SimError};
use engage::stream::{run_stream, Interruptible};

#[derive(Parser)]
#[command(name = "engage", version, about = "Sentiment-driven engagement strategy engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read perception events (JSON lines) and write robot commands.
    Run {
        /// Listen on TCP instead of stdin/stdout; without a value the
        /// config's port is used.
        #[arg(long, value_name = "PORT", num_args = 0..=1)]
        tcp: Option<Option<u16>>,
        #[arg(long, env = "ENGAGE_CONFIG")]
        config: Option<PathBuf>,
    },
    /// Run a scripted scenario and write a JSON report.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "ENGAGE_CONFIG")]
        config: Option<PathBuf>,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-frame CSV timeline path.
        #[arg(long)]
        timeline: Option<PathBuf>,
    },
    /// Validate a config file and list every violation.
    Check {
        #[arg(long, env = "ENGAGE_CONFIG")]
        config: PathBuf,
    },
}

enum Failure {
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            ConfigError::Invalid(_) => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn write_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("cannot write {}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig, Failure> {
    match path {
        Some(p) => Ok(EngineConfig::from_file(p)?),
        None => Ok(EngineConfig::default()),
    }
}

fn run(tcp: Option<Option<u16>>, config: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    // Ctrl-C or SIGTERM ends the stream at the next line boundary so the
    // summary still gets written
    ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed))
        .map_err(|e| Failure::Io(format!("cannot install signal handler: {e}")))?;
    let stderr = io::stderr();
    let summary = match tcp {
        None => {
            let input = BufReader::new(Interruptible::spawn(BufReader::new(io::stdin()), stop));
            let mut stdout = io::stdout().lock();
            let summary = run_stream(input, &mut stdout, &mut stderr.lock(), &cfg)
                .map_err(|e| Failure::Io(format!("stream: {e}")))?;
            writeln!(stdout, "{}", summary.to_line()).map_err(|e| Failure::Io(e.to_string()))?;
            summary
        }
        Some(port) => {
            let port = port.unwrap_or(cfg.port);
            let listener = TcpListener::bind(("0.0.0.0", port))
                .map_err(|e| Failure::Io(format!("cannot listen on port {port}: {e}")))?;
            eprintln!("listening on {}", listener.local_addr().map_err(|e| Failure::Io(e.to_string()))?);
            let (conn, peer) = listener.accept().map_err(|e| Failure::Io(e.to_string()))?;
            eprintln!("connection from {peer}");
            let mut writer = conn.try_clone().map_err(|e| Failure::Io(e.to_string()))?;
            let input = BufReader::new(Interruptible::spawn(BufReader::new(conn), stop));
            let summary = run_stream(input, &mut writer, &mut stderr.lock(), &cfg)
                .map_err(|e| Failure::Io(format!("stream: {e}")))?;
            writeln!(writer, "{}", summary.to_line()).map_err(|e| Failure::Io(e.to_string()))?;
            summary
        }
    };
    if summary.errors > 0 {
        eprintln!("{} malformed or rejected events skipped", summary.errors);
    }
    Ok(())
}

fn simulate(
    scenario: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    timeline: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let mut sc = Scenario::from_file(scenario)?;
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    let report = run_scenario(&sc, &cfg).map_err(|e| match e {
        SimError::Scenario(e) => e.into(),
        other => Failure::Invalid(other.to_string()),
    })?;
    match out {
        Some(path) => fs::write(path, report.to_json()).map_err(write_failure(path))?,
        None => io::stdout().write_all(report.to_json().as_bytes()).map_err(|e| Failure::Io(e.to_string()))?,
    }
    if let Some(path) = timeline {
        fs::write(path, report.timeline_csv()).map_err(write_failure(path))?;
    }
    Ok(())
}

fn check(config: &Path) -> Result<(), Failure> {
    EngineConfig::from_file(config)?;
    println!("ok");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { tcp, config } => run(*tcp, config.as_deref()),
        Command::Simulate { scenario, config, seed, out, timeline } => {
            simulate(scenario, config.as_deref(), *seed, out.as_deref(), timeline.as_deref())
        }
        Command::Check { config } => check(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(msg) | Failure::Io(msg)) = &f;
            eprintln!("{msg}");
            ExitCode::from(f.code())
        }
    }
}
