use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

/// Nash equilibrium of competing energy-storage investors.
#[derive(Debug, Parser)]
#[command(name = "storage-game", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario set: calibrated JSON, or a market CSV calibrated on the fly.
    /// Defaults to the bundled 2019 set. For `calibrate`, the output path.
    #[arg(long, global = true, value_name = "PATH")]
    pub scenarios: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,

    /// Relative KKT tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,

    /// Seed for `synth-data`; recorded in the solver settings otherwise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit monthly price slopes and pick representative days.
    Calibrate {
        /// Hourly market CSV with timestamp, price and net demand columns.
        #[arg(long, value_name = "CSV")]
        data: PathBuf,
    },
    /// Solve and certify one game.
    Solve {
        #[command(flatten)]
        game: GameArgs,
        /// Also write the assembled QP as text.
        #[arg(long)]
        dump_qp: bool,
        /// Also write the solver's per-iteration log.
        #[arg(long)]
        iteration_log: bool,
        /// Skip the best-response certification.
        #[arg(long)]
        skip_verify: bool,
    },
    /// Re-check a saved report against its game.
    Verify {
        #[command(flatten)]
        game: GameArgs,
        /// Report JSON written by `solve`.
        #[arg(long, value_name = "JSON")]
        report: PathBuf,
    },
    /// Homogeneous market, one row per investor count.
    SweepInvestors {
        /// Inclusive investor-count range.
        #[arg(long, default_value = "1..20")]
        range: CountRange,
        #[command(flatten)]
        template: TemplateArgs,
    },
    /// One Type-1, one Type-2 and a swept number of Type-3 investors.
    SweepEfficiency {
        /// Inclusive Type-3 count range.
        #[arg(long, default_value = "1..20")]
        range: CountRange,
        #[command(flatten)]
        template: TemplateArgs,
    },
    /// Write the deterministic synthetic market year as CSV.
    SynthData {
        #[arg(long, default_value_t = 2019)]
        year: i32,
    },
}

#[derive(Debug, Args)]
pub struct GameArgs {
    /// Game JSON with `investors` and `scenarios` (inline or a path).
    #[arg(long, value_name = "JSON", conflicts_with = "investors")]
    pub game: Option<PathBuf>,
    /// Number of identical investors on `--scenarios`.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub investors: Option<u32>,
    #[command(flatten)]
    pub template: TemplateArgs,
}

#[derive(Debug, Args)]
pub struct TemplateArgs {
    /// Investor spec JSON; defaults to the reference technology.
    #[arg(long, value_name = "JSON")]
    pub template: Option<PathBuf>,
    /// Override the minimum capacity/power ratio, hours.
    #[arg(long)]
    pub min_duration: Option<f64>,
    /// Override the maximum capacity/power ratio, hours.
    #[arg(long)]
    pub max_duration: Option<f64>,
}

/// `START..END`, both ends included.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountRange {
    pub start: usize,
    pub end: usize,
}

impl CountRange {
    pub fn counts(&self) -> Vec<usize> {
        (self.start..=self.end).collect()
    }
}

impl FromStr for CountRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
            None => (s, s),
        };
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
        let range = Self {
            start: parse(a)?,
            end: parse(b)?,
        };
        if range.start > range.end {
            return Err(format!("empty range {s}"));
        }
        Ok(range)
    }
}

impl fmt::Display for CountRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}
