use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dephaser_core::Tolerances;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "dephaser", version, about = "Dephasing superchannels: sampling, classification, realization and coherence bounds")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "DEPHASER_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Base dimension d.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=8))]
    pub dim: u64,

    /// Number of objects to sample, or of random superchannels to discriminate.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,

    /// Override every Monte Carlo trial count of `verify`.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,

    /// Smoothing parameters for the hypothesis-testing divergence, comma separated.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_eps)]
    pub eps: Vec<f64>,

    /// Random restarts for the seesaw and the divergence search.
    #[arg(long, global = true, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Hermiticity tolerance.
    #[arg(long = "tol.herm", global = true, value_parser = parse_tol)]
    herm: Option<f64>,
    /// Eigendecomposition tolerance.
    #[arg(long = "tol.eig", global = true, value_parser = parse_tol)]
    eig: Option<f64>,
    /// Unitarity tolerance.
    #[arg(long = "tol.unit", global = true, value_parser = parse_tol)]
    unit: Option<f64>,
    /// PSD slack.
    #[arg(long = "tol.psd", global = true, value_parser = parse_tol)]
    psd: Option<f64>,
    /// Gram-matrix agreement tolerance.
    #[arg(long = "tol.gram", global = true, value_parser = parse_tol)]
    gram: Option<f64>,
    /// Pivot threshold in isometry completion.
    #[arg(long = "tol.pivot", global = true, value_parser = parse_tol)]
    pivot: Option<f64>,
    /// Kraus pruning threshold.
    #[arg(long = "tol.kraus_prune", global = true, value_parser = parse_tol)]
    kraus_prune: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Tolerances {
        let mut t = Tolerances::default();
        let overrides = [
            ("herm", self.herm),
            ("eig", self.eig),
            ("unit", self.unit),
            ("psd", self.psd),
            ("gram", self.gram),
            ("pivot", self.pivot),
            ("kraus_prune", self.kraus_prune),
        ];
        for (name, v) in overrides {
            if let Some(v) = v {
                t.set(name, v);
            }
        }
        t
    }
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1)"))
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not a finite non-negative number"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Superchannel,
    Channel,
    DephasingChannel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample random objects.
    Sample {
        #[arg(long, value_enum, default_value_t = Kind::Superchannel)]
        kind: Kind,
    },
    /// Validate a correlation matrix and classify its memory.
    Classify { superchannel: PathBuf },
    /// Apply a superchannel to a channel.
    Apply { superchannel: PathBuf, channel: PathBuf },
    /// Synthesize memory unitaries that implement a superchannel.
    Realize { superchannel: PathBuf },
    /// Cohering power, robustness and divergence bounds of a channel.
    Coherence { channel: PathBuf },
    /// Find a strategy that tells superchannels apart using a gate, and check it against the robustness bound.
    Distinguish {
        gate: PathBuf,
        /// Candidate superchannels. When none are given, `--n` random ones (default 2) are sampled.
        superchannels: Vec<PathBuf>,
        /// Write the seesaw iteration log here as line-delimited JSON.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sample { .. } => "sample",
            Self::Classify { .. } => "classify",
            Self::Apply { .. } => "apply",
            Self::Realize { .. } => "realize",
            Self::Coherence { .. } => "coherence",
            Self::Distinguish { .. } => "distinguish",
            Self::Verify => "verify",
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Self::Sample { .. } | Self::Verify => vec![],
            Self::Classify { superchannel } | Self::Realize { superchannel } => vec![superchannel.clone()],
            Self::Apply { superchannel, channel } => vec![superchannel.clone(), channel.clone()],
            Self::Coherence { channel } => vec![channel.clone()],
            Self::Distinguish { gate, superchannels, .. } => {
                std::iter::once(gate.clone()).chain(superchannels.iter().cloned()).collect()
            }
        }
    }
}
