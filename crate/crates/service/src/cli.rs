//! Command-line front end.
//!
//! Exit status: 0 on success, 2 for invalid scenarios, events or settings,
//! 3 when a well-formed question has no answer, 1 for anything else.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use cfexplain::config::resolve;
use cfexplain::{
    explain, parse_scenario, ConfigLayer, Engine, EngineError, Event, ExplainError, ExplanationKind,
    ExplanationRequest, ScenarioError, Settings, Weights, World,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::api::{router, AppState};
use crate::store::{SessionStore, StoreError};

#[derive(Debug, Parser)]
#[command(name = "cfexplain", version, about = "Explain the state of a rule-based smart environment")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigFlags,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings flags; they override `CFEXPLAIN_*` variables, which override the file.
#[derive(Debug, Default, Args)]
pub struct ConfigFlags {
    /// TOML settings file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Criterion weights: sparsity,temporality,proximity,abnormality.
    #[arg(long, global = true, value_name = "W,W,W,W")]
    pub weights: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub sparsity_cap: Option<usize>,
    #[arg(long, global = true, value_name = "MS")]
    pub temporality_sentinel_ms: Option<i64>,
    #[arg(long, global = true, value_name = "BOOL")]
    pub sparsity_primary: Option<bool>,
    #[arg(long, global = true, value_name = "N")]
    pub cascade_cap: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario document.
    Validate { file: PathBuf },
    /// Run a list of events from the initial state and print the trajectory as NDJSON.
    Simulate {
        file: PathBuf,
        #[arg(long, value_name = "FILE")]
        events: PathBuf,
    },
    /// Explain why a device is not in the given state.
    Explain {
        file: PathBuf,
        #[arg(long)]
        device: String,
        #[arg(long)]
        foil: String,
        #[arg(long, value_enum, default_value_t = Kind::Counterfactual)]
        kind: Kind,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Persist sessions here; without it sessions live in memory only.
        #[arg(long, value_name = "DIR")]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Counterfactual,
    Causal,
    Both,
}

impl From<Kind> for ExplanationKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Counterfactual => ExplanationKind::Counterfactual,
            Kind::Causal => ExplanationKind::Causal,
            Kind::Both => ExplanationKind::Both,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    NoAnswer(String),
    Other(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::NoAnswer(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::NoAnswer(m) | Failure::Other(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let mut msg = match &e {
            ScenarioError::Syntax { .. } => e.to_string(),
            ScenarioError::Invalid(_) => "invalid scenario".to_string(),
        };
        for v in e.violations() {
            msg.push_str(&format!("\n  {}: {}", v.code, v.message));
        }
        Failure::Invalid(msg)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::CascadeOverflow { .. } => Failure::NoAnswer(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<ExplainError> for Failure {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::NoExplanandum { .. }
            | ExplainError::UnachievableFoil { .. }
            | ExplainError::NoCandidates { .. } => Failure::NoAnswer(e.to_string()),
            ExplainError::Engine(inner) => inner.into(),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Scenario(s) => s.into(),
            StoreError::Engine(s) => s.into(),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

impl ConfigFlags {
    fn layer(&self) -> Result<ConfigLayer, ExplainError> {
        Ok(ConfigLayer {
            weights: self.weights.as_deref().map(Weights::parse_list).transpose()?,
            sparsity_cap: self.sparsity_cap,
            temporality_sentinel_ms: self.temporality_sentinel_ms,
            sparsity_primary: self.sparsity_primary,
            cascade_cap: self.cascade_cap,
        })
    }

    /// Flags over the process environment over the config file over defaults.
    pub fn settings(&self) -> Result<Settings, ExplainError> {
        let file = match &self.config {
            Some(p) => Some(
                std::fs::read_to_string(p).map_err(|e| ExplainError::InvalidConfig(format!("{}: {e}", p.display())))?,
            ),
            None => None,
        };
        resolve(file.as_deref(), ConfigLayer::from_env(std::env::vars())?, self.layer()?)
    }
}

/// Runs one command and returns the process exit status.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cli, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let settings = cli.config.settings()?;
    let io = |e: std::io::Error| Failure::Other(e.to_string());
    match cli.command {
        Command::Validate { file } => {
            let s = parse_scenario(&read(&file)?)?;
            writeln!(
                out,
                "ok: {} entities, {} rules, {} history entries",
                s.entities.len(),
                s.rules.len(),
                s.history.len()
            )
            .map_err(io)?;
        }
        Command::Simulate { file, events } => {
            let scenario = parse_scenario(&read(&file)?)?;
            let events: Vec<Event> =
                serde_json::from_str(&read(&events)?).map_err(|e| Failure::Invalid(format!("events: {e}")))?;
            let trajectory = Engine::new(&scenario, settings.engine).simulate(&events)?;
            out.write_all(trajectory.to_ndjson().as_bytes()).map_err(io)?;
        }
        Command::Explain { file, device, foil, kind, json } => {
            let scenario = parse_scenario(&read(&file)?)?;
            let world = World::from_scenario(&scenario, settings.engine)?;
            let report = explain(&world, &ExplanationRequest::new(device, foil, kind.into()), &settings)?;
            if json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                writeln!(out, "{text}").map_err(io)?;
            } else {
                for e in &report.explanations {
                    writeln!(out, "{}", e.text).map_err(io)?;
                }
            }
        }
        Command::Serve { port, host, data_dir } => {
            let store = match data_dir {
                Some(dir) => SessionStore::open(dir, settings.engine)?,
                None => SessionStore::in_memory(settings.engine),
            };
            let addr: SocketAddr =
                format!("{host}:{port}").parse().map_err(|e| Failure::Invalid(format!("address: {e}")))?;
            let runtime = tokio::runtime::Runtime::new().map_err(io)?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr).await.map_err(io)?;
                let bound = listener.local_addr().map_err(io)?;
                writeln!(out, "listening on {bound}").map_err(io)?;
                out.flush().map_err(io)?;
                axum::serve(listener, router(AppState::new(store, settings))).await.map_err(io)
            })?;
        }
    }
    Ok(())
}
