//! The `paramfuzz` command line: argument parsing, configuration and the
//! pipeline stages.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_SCENARIO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "paramfuzz", version, about = "Runtime-parameter-aware driver fuzzing over a simulated kernel")]
pub struct Cli {
    /// TOML or JSON file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inventory of writable attributes, module parameters and impact counts.
    Extract(StageArgs),
    /// Device relation tree and parameter-to-driver map.
    Relate(StageArgs),
    /// Call descriptors (`.szp`) and their `.meta.json` annotations.
    Gen(StageArgs),
    /// Run a fuzzing campaign.
    Fuzz(FuzzArgs),
    /// Re-run a saved case.
    Replay(ReplayArgs),
    /// Compare campaign directories: medians and intervals per mode.
    Report(ReportArgs),
    /// Run the bundled scenarios.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct StageArgs {
    /// DMIR program.
    pub program: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Baseline,
    Syzlang,
    #[value(name = "syzlang_mutation", alias = "syzlang-mutation")]
    SyzlangMutation,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long)]
    pub program: Option<PathBuf>,
    #[arg(long)]
    pub descs: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub budget_execs: Option<u64>,
    #[arg(long)]
    pub budget_secs: Option<f64>,
    /// Defaults to PARAMFUZZ_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub relation_prob: Option<f64>,
    #[arg(long)]
    pub epoch: Option<u64>,
    #[arg(long)]
    pub max_threads: Option<usize>,
    #[arg(long)]
    pub max_calls_per_thread: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A `.case.json` file, or a crash directory holding `repro.case.json`.
    pub case: PathBuf,
    #[arg(long)]
    pub program: Option<PathBuf>,
    /// Print the interleaving trace.
    #[arg(long)]
    pub trace: bool,
    /// Follow a recorded trace (JSON array) instead of the case's seed.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Print the full result as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Execs,
    Time,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Campaign output directories.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "execs")]
    pub axis: AxisArg,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Directory of `.scenario.json` files; defaults to `<corpus>/scenarios`.
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    /// Directory the scenarios' program paths are relative to.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

/// Bad input that is not an I/O failure.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct Invalid(pub String);

/// Map an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    use paramfuzz::descgen::{DescParseError, GenError};
    use paramfuzz::dmir::DmirError;
    use paramfuzz::fuzzer::ConfigError;
    use paramfuzz::scenario::ScenarioError;
    use paramfuzz::vkernel::BootError;
    let invalid = err.chain().any(|c| {
        c.is::<Invalid>()
            || c.is::<DmirError>()
            || c.is::<BootError>()
            || c.is::<GenError>()
            || c.is::<DescParseError>()
            || c.is::<ConfigError>()
            || c.is::<ScenarioError>()
            || c.is::<config::ConfigFileError>()
            || c.is::<manifest::ManifestError>()
            || c.is::<report::ReportError>()
            || c.is::<serde_json::Error>()
    });
    if invalid {
        EXIT_INVALID
    } else {
        EXIT_FAILURE
    }
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    let file = match &cli.config {
        Some(p) => config::FileConfig::load(p)?,
        None => config::FileConfig::default(),
    };
    match cli.command {
        Command::Extract(a) => commands::extract(a, &file),
        Command::Relate(a) => commands::relate(a, &file),
        Command::Gen(a) => commands::gen(a, &file),
        Command::Fuzz(a) => commands::fuzz(a, &file),
        Command::Replay(a) => commands::replay(a, &file),
        Command::Report(a) => commands::report(a, &file),
        Command::Check(a) => commands::check(a, &file),
    }
}
