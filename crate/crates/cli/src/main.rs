//! `ballots`: command-line front end for ballot-geometry.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Internal(String),
}

const EXIT_USAGE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ballots", version, about = "Geometry, bloc detection and slate detection for ranked-choice ballots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print the machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write report.txt, report.json, artifacts and manifest.json here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub serial: bool,
    /// Worker threads for parallel loops (0 = one per core).
    #[arg(long, global = true, env = "BALLOTS_JOBS", default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Pam,
    Lloyd,
    ExactMedoid,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlateMethodArg {
    Centers,
    Agglom,
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphVariantArg {
    /// Basic and shortcut graphs.
    Standard,
    Basic,
    Shortcut,
    Generalized,
    /// Basic, shortcut and generalized graphs.
    All,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Summary statistics of a profile.
    Stats {
        /// BLT or profile file; `-` reads stdin.
        #[arg(default_value = "-")]
        input: String,
        /// Number of most common ballot types to list.
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Every distance and disagreement count between two ballots.
    Distance {
        /// Ballot literal such as `A>B>C` or `1>2>3`.
        a: String,
        b: String,
        /// Number of candidates (names default to letters).
        #[arg(long)]
        m: Option<usize>,
        /// Take candidate names from this BLT or profile file.
        #[arg(long)]
        roster: Option<String>,
        /// Also report this metric (borda, borda-avg, h2h, hausdorff, kp:<p>).
        #[arg(long)]
        metric: Option<String>,
        /// K^(p) parameters to report.
        #[arg(long, default_value = "0.5")]
        kp: Vec<f64>,
    },
    /// Exhaustively compare graph path distances with the L1 distances.
    GraphCheck {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "standard")]
        variant: GraphVariantArg,
    },
    /// Cluster voters into blocs.
    Cluster {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Ballot metric for pam, exact-medoid and silhouettes.
        #[arg(long, default_value = "borda")]
        metric: String,
        #[arg(long, value_enum, default_value = "pam")]
        algo: Algo,
        /// Embedding for lloyd and median (borda, borda-avg, h2h).
        #[arg(long, default_value = "borda")]
        embedding: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        /// Operation cap for exact searches.
        #[arg(long, default_value_t = 2_000_000_000)]
        budget: u128,
    },
    /// Exact 1- or 2-Kemeny centers over all complete rankings.
    Kemeny {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "h2h")]
        metric: String,
        #[arg(long, default_value_t = 2_000_000_000)]
        budget: u128,
    },
    /// Group candidates into slates.
    Slates {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "centers")]
        method: SlateMethodArg,
        #[arg(long, default_value = "average")]
        linkage: String,
        /// Candidate dissimilarity; defaults to rank-difference for centers
        /// and completion-cloud for agglomeration.
        #[arg(long)]
        dissim: Option<String>,
        /// Ballot-to-slate rule (borda-per-candidate or nearest-embedding).
        #[arg(long, default_value = "borda-per-candidate")]
        rule: String,
    },
    /// Density of ballots over the slate simplex.
    Simplex {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "agglom")]
        method: SlateMethodArg,
        #[arg(long, default_value = "average")]
        linkage: String,
    },
    /// Classical MDS of the ballot types.
    Mds {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value = "borda")]
        metric: String,
        /// Colour points by a PAM clustering with this many clusters.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a benchmark election as profile text.
    Synth {
        /// E, E2 or E3.
        #[arg(long)]
        family: String,
        /// Swap parameter (required for E2 and E3).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dataset-wide method comparison over every .blt file under a directory.
    CorpusSweep {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 2_000_000_000)]
        budget: u128,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats { .. } => "stats",
            Command::Distance { .. } => "distance",
            Command::GraphCheck { .. } => "graph-check",
            Command::Cluster { .. } => "cluster",
            Command::Kemeny { .. } => "kemeny",
            Command::Slates { .. } => "slates",
            Command::Simplex { .. } => "simplex",
            Command::Mds { .. } => "mds",
            Command::Synth { .. } => "synth",
            Command::CorpusSweep { .. } => "corpus-sweep",
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CliError>() {
            return match c {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Parse(_) => EXIT_PARSE,
                CliError::Internal(_) => EXIT_INTERNAL,
            };
        }
        if let Some(c) = cause.downcast_ref::<ballot_geometry::Error>() {
            return match c {
                ballot_geometry::Error::Parse { .. } => EXIT_PARSE,
                ballot_geometry::Error::BudgetExceeded { .. } => EXIT_BUDGET,
                _ => EXIT_USAGE,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_USAGE;
        }
    }
    EXIT_INTERNAL
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match ballot_geometry::exec::with_threads(cli.jobs, || commands::run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
