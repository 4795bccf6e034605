//! Reproducible experiments on top of `reluapprox`: network construction,
//! error sweeps, cost tables, property checks and network evaluation.

pub mod commands;
pub mod config;
pub mod suites;

use std::fmt;
use std::fs;
use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use reluapprox::construct::DeltaMode;
use reluapprox::metrics::QuadratureRule;
use reluapprox::Error;

use config::ExperimentConfig;

pub const TOOL: &str = "reluapprox";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A failure carrying its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message: msg.into(),
        }
    }

    pub fn failure(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: "property",
            message: msg.into(),
        }
    }

    pub fn context(mut self, ctx: impl fmt::Display) -> Self {
        self.message = format!("{ctx}: {}", self.message);
        self
    }

    /// Machine-readable error record.
    pub fn record(&self, cfg: &ExperimentConfig) -> serde_json::Value {
        json!({
            "tool": TOOL,
            "version": VERSION,
            "error": self.kind,
            "message": self.message,
            "exit_code": self.code,
            "config": cfg.echo(),
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::ConstructionInfeasible { .. } => (3, "construction-infeasible"),
            Error::CertificateViolation(_) => (1, "certificate"),
            Error::InputShape { .. } => (2, "input-shape"),
            Error::Composition { .. } => (2, "composition"),
            Error::Parameter(_) => (2, "parameter"),
            Error::Parse { .. } => (2, "parse"),
            Error::Validation(_) => (2, "validation"),
            Error::Precondition(_) => (2, "precondition"),
            Error::Shape(_) => (2, "shape"),
            Error::Resolution(_) => (2, "resolution"),
            Error::DegenerateGrid(_) => (2, "degenerate-grid"),
            Error::Resource(_) => (2, "resource"),
            Error::Registry(_) => (2, "registry"),
            Error::Domain(_) => (2, "domain"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self {
            code: 2,
            kind: "io",
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            code: 2,
            kind: "io",
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "reluapprox", version, about = "Explicit ReLU network approximation experiments")]
pub struct Cli {
    /// Worker threads for quadrature and sweeps (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log filter, e.g. `info` or `reluapprox=debug`.
    #[arg(long, global = true)]
    pub log_level: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a network for a target and write it with a metadata sidecar.
    Construct(CommonArgs),
    /// Construct over several N, measure errors and fit the rate.
    Sweep(CommonArgs),
    /// Tabulate parallel time and memory costs.
    Cost(CommonArgs),
    /// Run the property suites and write a JUnit report.
    Check(CommonArgs),
    /// Evaluate a stored network on vectors read from stdin.
    Eval {
        #[arg(long)]
        network: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON configuration document; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "N-list", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_mode)]
    pub delta_mode: Option<DeltaMode>,
    #[arg(long)]
    pub delta_floor: Option<f64>,
    #[arg(long)]
    pub delta_shrink: Option<f64>,
    #[arg(long)]
    pub delta_target: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, value_parser = parse_rule)]
    pub rule: Option<QuadratureRule>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "L")]
    pub depth: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub cores: Option<Vec<usize>>,
    #[arg(long)]
    pub t_s: Option<f64>,
    #[arg(long)]
    pub t_w: Option<f64>,
    #[arg(long)]
    pub c_flop: Option<f64>,
    /// Suite to run (repeatable).
    #[arg(long = "suite")]
    pub suites: Option<Vec<String>>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Points per block minus one for the interpolant suite.
    #[arg(long = "n")]
    pub n_blocks: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub junit: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<DeltaMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_rule(s: &str) -> Result<QuadratureRule, String> {
    match s {
        "midpoint" => Ok(QuadratureRule::Midpoint),
        "trapezoid" => Ok(QuadratureRule::Trapezoid),
        other => Err(format!("unknown rule `{other}`")),
    }
}

impl CommonArgs {
    /// Loads the configuration file (if any) and applies the flags on top.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_json_bytes(&fs::read(p)?)
                .map_err(|e| CliError::from(e).context(p.display()))?,
            None => ExperimentConfig::default(),
        };
        let flags = ExperimentConfig {
            target: self.target.clone(),
            d: self.d,
            alpha: self.alpha,
            nu: self.nu,
            n: self.n,
            n_list: self.n_list.clone(),
            delta_mode: self.delta_mode,
            delta_floor: self.delta_floor,
            delta_shrink: self.delta_shrink,
            delta_target: self.delta_target,
            grid_points: self.grid_points,
            rule: self.rule,
            seed: self.seed,
            depth: self.depth,
            cores: self.cores.clone(),
            t_s: self.t_s,
            t_w: self.t_w,
            c_flop: self.c_flop,
            suites: self.suites.clone(),
            m: self.m,
            n_blocks: self.n_blocks,
            out: self.out.clone(),
            summary: self.summary.clone(),
            trace: self.trace.clone(),
            junit: self.junit.clone(),
        };
        Ok(base.overlay(&flags))
    }
}

pub fn cmd_check(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let names = cfg.suites.clone().unwrap_or_default();
    let results = suites::run_suites(&names, cfg).map_err(CliError::usage)?;
    let path = cfg.junit.clone().unwrap_or_else(|| PathBuf::from("check-report.xml"));
    fs::write(path, suites::junit_xml(&results, cfg))?;
    let mut code = 0;
    for r in &results {
        match &r.outcome {
            Ok(()) => println!("PASS {}::{}", r.suite, r.name),
            Err(msg) => {
                println!("FAIL {}::{}: {msg}", r.suite, r.name);
                code = 1;
            }
        }
    }
    Ok(code)
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let mut cfg = ExperimentConfig::default();
    let result = match &cli.command {
        Command::Eval { network } => {
            let stdin = io::stdin();
            commands::cmd_eval(network, stdin.lock(), io::stdout().lock())
        }
        Command::Construct(a) | Command::Sweep(a) | Command::Cost(a) | Command::Check(a) => {
            a.resolve().and_then(|c| {
                cfg = c;
                match &cli.command {
                    Command::Construct(_) => commands::cmd_construct(&cfg),
                    Command::Sweep(_) => commands::cmd_sweep(&cfg),
                    Command::Cost(_) => commands::cmd_cost(&cfg),
                    _ => cmd_check(&cfg),
                }
            })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.record(&cfg));
            e.code
        }
    }
}
