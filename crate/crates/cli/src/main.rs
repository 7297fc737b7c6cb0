mod args;
mod commands;
mod input;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use dephaser_core::Tolerances;
use serde::Serialize;
use serde_json::Value;

use args::{Cli, Command, Kind};

const SCHEMA_VERSION: u32 = 1;

/// Exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const SEMANTIC: u8 = 3;
    pub const SOLVER: u8 = 4;
}

/// Resolved run configuration, echoed in every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub dim: usize,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub eps: Vec<f64>,
    pub restarts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub inputs: Vec<PathBuf>,
    pub tolerances: Tolerances,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    pub details: Option<Value>,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into(), details: None }
    }

    pub fn semantic(message: impl Into<String>) -> Self {
        Self { code: exit::SEMANTIC, message: message.into(), details: None }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    pub fn context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl From<dephaser_core::Error> for Failure {
    fn from(e: dephaser_core::Error) -> Self {
        use dephaser_core::Error as E;
        let code = match e {
            E::Solver(_) => exit::SOLVER,
            E::Json(_) => exit::USAGE,
            _ => exit::SEMANTIC,
        };
        Self { code, message: e.to_string(), details: None }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Command-specific results plus an optional verdict for check-style commands.
pub struct Outcome {
    pub results: Value,
    pub passed: Option<bool>,
}

#[derive(Serialize)]
struct ErrorInfo<'a> {
    exit_code: u8,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<&'a Value>,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
    results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorInfo<'a>>,
}

fn config(cli: &Cli) -> RunConfig {
    let c = &cli.common;
    let eps = match (&cli.command, c.eps.is_empty()) {
        (Command::Coherence { .. }, true) => vec![0.0, 0.1, 0.5],
        _ => c.eps.clone(),
    };
    RunConfig {
        seed: c.seed,
        dim: c.dim as usize,
        n: c.n.map(|n| n as usize),
        trials: c.trials.map(|t| t as usize),
        eps,
        restarts: c.restarts as usize,
        kind: match cli.command {
            Command::Sample { kind } => Some(kind),
            _ => None,
        },
        inputs: cli.command.inputs(),
        tolerances: c.tol.resolve(),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = config(&cli);
    let start = Instant::now();
    let outcome = commands::run(&cli.command, &cfg);

    let (results, passed, failure) = match outcome {
        Ok(o) => (o.results, o.passed, None),
        Err(f) => (Value::Null, None, Some(f)),
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: cli.command.name(),
        config: &cfg,
        passed,
        results,
        error: failure.as_ref().map(|f| ErrorInfo { exit_code: f.code, message: &f.message, details: f.details.as_ref() }),
    };
    let text = serde_json::to_string_pretty(&report).expect("report is plain JSON") + "\n";
    eprintln!("{}: {:.2?}", cli.command.name(), start.elapsed());

    if let Err(f) = emit(&text, cli.common.out.as_deref()) {
        eprintln!("error: {f}");
        return ExitCode::from(f.code);
    }
    let code = match (&failure, passed) {
        (Some(f), _) => {
            eprintln!("error: {f}");
            f.code
        }
        (None, Some(false)) => exit::CHECK_FAILED,
        _ => exit::OK,
    };
    ExitCode::from(code)
}
