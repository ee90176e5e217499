//! Command-line parsing.

use std::ffi::OsString;
use std::io;
use std::path::PathBuf;

use aircomp_core::policy::PolicyKind;
use clap::{Args, Parser, Subcommand};

use crate::runner::{cmd_run, cmd_sweep, CliError, RunSpec};
use crate::scenario_io::{apply_overrides, resolve_scenario, to_toml, BUILTIN_EARTHQUAKE};

#[derive(Debug, Parser)]
#[command(name = "aircomp", version, about = "UAV-assisted edge computing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one policy and UAV count for one or more seeds.
    Run(RunArgs),
    /// Run every policy over a range of UAV counts and seeds.
    Sweep(SweepArgs),
    /// Print the scenario, overrides applied, as a scenario file.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file, or `builtin:earthquake`.
    #[arg(long, default_value = BUILTIN_EARTHQUAKE)]
    pub scenario: String,
    /// Users per town in the built-in scenario.
    #[arg(long)]
    pub users_per_town: Option<u32>,
    /// Scenario setting as a dotted key. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file, or `builtin:earthquake`.
    #[arg(long, default_value = BUILTIN_EARTHQUAKE)]
    pub scenario: String,
    /// Users per town in the built-in scenario.
    #[arg(long)]
    pub users_per_town: Option<u32>,
    /// Output directory.
    #[arg(long, env = "AIRCOMP_OUT", default_value = "aircomp-out")]
    pub out: PathBuf,
    /// Scenario setting as a dotted key, e.g. `sim.duration=2000`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Deployment policy: none, random, load-balancing, emergency or lsi.
    #[arg(long)]
    pub policy: PolicyKind,
    /// Number of UAVs.
    #[arg(long, default_value_t = aircomp_core::scenario::DEFAULT_UAV_COUNT)]
    pub uavs: u32,
    /// Seed. Repeatable.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Vec<u64>,
    /// Seeds as a list (`1,2,3`) or range (`1..=5`).
    #[arg(long, value_parser = parse_u64_list)]
    pub seeds: Option<NumberList<u64>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Policies to compare. Repeatable; all of them by default.
    #[arg(long)]
    pub policy: Vec<PolicyKind>,
    /// UAV counts as a range (`4..=10`) or list.
    #[arg(long, default_value = "4..=10", value_parser = parse_u32_list)]
    pub uav_range: NumberList<u32>,
    /// Seeds as a list (`1,2,3`) or range (`1..=5`).
    #[arg(long, default_value = "1..=5", value_parser = parse_u64_list)]
    pub seeds: NumberList<u64>,
    /// Cells to simulate at the same time.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Skip cells whose outputs already exist.
    #[arg(long)]
    pub resume: bool,
}

/// Numbers given as one flag value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberList<T>(pub Vec<T>);

/// Parses `a..=b`, `a..b`, `a-b`, a single number, or a comma-separated
/// list of those. A range whose end precedes its start is empty.
fn parse_list(s: &str) -> Result<Vec<u64>, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        if let Some((a, b)) = part.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            out.extend(num(a)?..num(b)?);
        } else if let Some((a, b)) = part.split_once('-') {
            out.extend(num(a)?..=num(b)?);
        } else {
            out.push(num(part)?);
        }
    }
    Ok(out)
}

fn parse_u64_list(s: &str) -> Result<NumberList<u64>, String> {
    parse_list(s).map(NumberList)
}

fn parse_u32_list(s: &str) -> Result<NumberList<u32>, String> {
    parse_list(s)?
        .into_iter()
        .map(|v| u32::try_from(v).map_err(|_| format!("{v} is too large")))
        .collect::<Result<_, _>>()
        .map(NumberList)
}

impl RunArgs {
    pub fn spec(&self) -> RunSpec {
        let seeds = match (&self.seeds, self.seed.is_empty()) {
            (Some(s), _) => s.0.clone(),
            (None, false) => self.seed.clone(),
            (None, true) => vec![1],
        };
        RunSpec {
            scenario: self.common.scenario.clone(),
            users_per_town: self.common.users_per_town,
            policies: vec![self.policy],
            uav_counts: vec![self.uavs],
            seeds,
            out_dir: self.common.out.clone(),
            overrides: self.common.overrides.clone(),
        }
    }
}

impl SweepArgs {
    pub fn spec(&self) -> RunSpec {
        RunSpec {
            scenario: self.common.scenario.clone(),
            users_per_town: self.common.users_per_town,
            policies: if self.policy.is_empty() {
                PolicyKind::ALL.to_vec()
            } else {
                self.policy.clone()
            },
            uav_counts: self.uav_range.0.clone(),
            seeds: self.seeds.0.clone(),
            out_dir: self.common.out.clone(),
            overrides: self.common.overrides.clone(),
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut stdout = io::stdout();
    match &cli.command {
        Command::Run(a) => cmd_run(&a.spec(), &mut stdout),
        Command::Sweep(a) => cmd_sweep(&a.spec(), a.jobs, a.resume, &mut stdout),
        Command::Scenario(a) => {
            let s = resolve_scenario(&a.scenario, a.users_per_town)?;
            let s = apply_overrides(&s, &a.overrides)?;
            s.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            print!("{}", to_toml(&s));
            Ok(())
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("4..=7").unwrap(), [4, 5, 6, 7]);
        assert_eq!(parse_list("4..7").unwrap(), [4, 5, 6]);
        assert_eq!(parse_list("1,3,9-10").unwrap(), [1, 3, 9, 10]);
        assert_eq!(parse_list("8..=4").unwrap(), Vec::<u64>::new());
        assert!(parse_list("x").is_err());
    }

    #[test]
    fn run_defaults() {
        let cli = Cli::try_parse_from(["aircomp", "run", "--policy", "lsi"]).unwrap();
        let Command::Run(a) = cli.command else { panic!() };
        let spec = a.spec();
        assert_eq!(spec.seeds, [1]);
        assert_eq!(spec.uav_counts, [8]);
        assert_eq!(spec.scenario, BUILTIN_EARTHQUAKE);
    }

    #[test]
    fn sweep_defaults() {
        let cli = Cli::try_parse_from(["aircomp", "sweep"]).unwrap();
        let Command::Sweep(a) = cli.command else { panic!() };
        let spec = a.spec();
        assert_eq!(spec.policies.len(), 5);
        assert_eq!(spec.uav_counts, [4, 5, 6, 7, 8, 9, 10]);
        assert_eq!(spec.seeds, [1, 2, 3, 4, 5]);
    }

    #[test]
    fn bogus_policy_lists_valid_names() {
        let err = Cli::try_parse_from(["aircomp", "run", "--policy", "bogus"]).unwrap_err();
        let msg = err.to_string();
        for name in aircomp_core::policy::POLICY_NAMES {
            assert!(msg.contains(name), "{msg}");
        }
    }
}
