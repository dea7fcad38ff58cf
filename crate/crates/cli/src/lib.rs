//! The `explicable` command-line tool.
//!
//! Exit codes: 0 on success, 1 on bad input or internal failure, 2 when no
//! plan exists (unsolvable task, empty cost bound, invalid plan), 3 when a
//! search ran out of budget.

pub mod commands;
pub mod manifest;
pub mod pipeline;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use explicable::distances::{CompositeKind, DistanceConfig, LinkMode};
use explicable::regression::ModelKind;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_NO_SOLUTION: u8 = 2;
pub const EXIT_RESOURCE_LIMIT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "explicable", version, about = "Plan distances, explicability models and explicable plan search")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Node expansion budget for searches.
    #[arg(long, global = true, default_value_t = explicable::search::DEFAULT_BUDGET)]
    pub budget: usize,
    /// Suppress progress messages on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DistanceArgs {
    /// How causal links are read off plans.
    #[arg(long, default_value = "literal-adjacent")]
    pub link_mode: LinkMode,
    /// How the three distances are combined to pick the closest expected plan.
    #[arg(long, default_value = "squared-sum")]
    pub composite: CompositeKind,
}

impl DistanceArgs {
    pub fn config(&self) -> DistanceConfig {
        DistanceConfig { link_mode: self.link_mode, composite: self.composite }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelsArgs {
    /// Robot domain file.
    #[arg(long)]
    pub robot: PathBuf,
    /// Human mental-model domain file.
    #[arg(long)]
    pub human: PathBuf,
    /// Robot-to-human action name mapping (tab-separated).
    #[arg(long = "map")]
    pub mapping: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find a cost-optimal plan.
    Plan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// Write the plan here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a plan is executable and reaches the goal.
    Validate {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Distances between a robot plan and a human-model plan, as a CSV row.
    Distances {
        #[command(flatten)]
        models: ModelsArgs,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan_r: PathBuf,
        #[arg(long)]
        plan_h: PathBuf,
        #[command(flatten)]
        distance: DistanceArgs,
    },
    /// Write every cost-optimal plan of a (human) model, up to `k`.
    GenExpected {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = explicable::expected::DEFAULT_K_MAX)]
        k: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a rule-scored training CSV from problems.
    Featurize {
        #[command(flatten)]
        models: ModelsArgs,
        #[arg(long)]
        rules: PathBuf,
        /// Problem files or directories of them.
        #[arg(long, num_args = 1.., required = true)]
        problems: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        cost_slack: u64,
        #[arg(long, default_value_t = 40)]
        plans_per_problem: usize,
        #[arg(long, default_value_t = explicable::search::DEFAULT_K_EXPECTED)]
        k_expected: usize,
        #[command(flatten)]
        distance: DistanceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-search and train a regression model on a CSV.
    Train {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "forest")]
        kind: ModelKind,
        /// TOML grid; without it a single default setting is used.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream robot plans with improving predicted explicability.
    Explicate {
        #[command(flatten)]
        models: ModelsArgs,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Cost bound; defaults to the robot optimum plus `--cost-slack`.
        #[arg(long)]
        max_cost: Option<u64>,
        #[arg(long, default_value_t = 2)]
        cost_slack: u64,
        #[arg(long, default_value_t = explicable::search::DEFAULT_K_EXPECTED)]
        k_expected: usize,
        /// Write the solution index/score curve here.
        #[arg(long)]
        anytime_csv: Option<PathBuf>,
        #[command(flatten)]
        distance: DistanceArgs,
    },
    /// Rule-based score of a plan.
    Score {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Compare optimal and explicable plans on a set of problems.
    Eval {
        #[command(flatten)]
        models: ModelsArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        problems: Vec<PathBuf>,
        #[arg(long, default_value_t = 2)]
        cost_slack: u64,
        #[arg(long, default_value_t = explicable::search::DEFAULT_K_EXPECTED)]
        k_expected: usize,
        #[command(flatten)]
        distance: DistanceArgs,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run featurize, train, explicate and eval from a config file.
    Pipeline {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

pub fn main_exit() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
