//! Single runs and factorial sweeps, with their on-disk layout
//! `out/<policy>/<uav_count>/<seed>/`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use aircomp_core::domain::TownId;
use aircomp_core::metrics::{CellKey, RunSummary};
use aircomp_core::policy::PolicyKind;
use aircomp_core::scenario::{Scenario, TimedEventKind};
use aircomp_core::{run, RunOutput};
use thiserror::Error;

use crate::report::{comparison_csv, export_run, parse_counts_csv, write_atomic};
use crate::scenario_io::{apply_overrides, resolve_scenario, LoadError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Io(e.to_string())
        }
    }
}

fn io_err(what: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", what.display()))
}

/// What to simulate and where to put the results.
#[derive(Debug, Clone)]
pub struct RunSpec {
    /// File path or `builtin:earthquake`.
    pub scenario: String,
    pub users_per_town: Option<u32>,
    pub policies: Vec<PolicyKind>,
    pub uav_counts: Vec<u32>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub overrides: Vec<String>,
}

pub fn cell_dir(out: &Path, policy: PolicyKind, uav_count: u32, seed: u64) -> PathBuf {
    out.join(policy.name()).join(uav_count.to_string()).join(seed.to_string())
}

/// Loads the scenario and applies the overrides; validation happens per
/// cell once the UAV count and seed are in place.
pub fn base_scenario(spec: &RunSpec) -> Result<Scenario, CliError> {
    let s = resolve_scenario(&spec.scenario, spec.users_per_town)?;
    let s = apply_overrides(&s, &spec.overrides)?;
    s.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(s)
}

/// The scenario of one cell: the base with its UAV count and seed.
pub fn cell_scenario(base: &Scenario, uav_count: u32, seed: u64) -> Scenario {
    let mut s = base.clone();
    s.uavs.count = uav_count;
    s.sim.rng_seed = seed;
    s
}

pub fn run_cell(base: &Scenario, policy: PolicyKind, uav_count: u32, seed: u64) -> Result<RunOutput, CliError> {
    let s = cell_scenario(base, uav_count, seed);
    let world = s.instantiate(seed).map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(run(world, &s.sim, &policy.with_params(&s.policy)))
}

/// Start of the first infrastructure loss, if the scenario has one.
fn disruption_at(s: &Scenario) -> Option<f64> {
    s.events
        .iter()
        .filter(|e| matches!(e.kind, TimedEventKind::DestroyEdge { .. }))
        .map(|e| e.at)
        .min_by(f64::total_cmp)
}

fn validate_spec(spec: &RunSpec) -> Result<(), CliError> {
    if spec.policies.is_empty() {
        return Err(CliError::Validation("policy: at least one policy is required".into()));
    }
    if spec.uav_counts.is_empty() {
        return Err(CliError::Validation("uavs: the UAV count range is empty".into()));
    }
    if spec.seeds.is_empty() {
        return Err(CliError::Validation("seeds: at least one seed is required".into()));
    }
    Ok(())
}

/// One simulation per seed for every requested (policy, UAV count); prints
/// one line per run.
pub fn cmd_run(spec: &RunSpec, out: &mut dyn Write) -> Result<(), CliError> {
    validate_spec(spec)?;
    let base = base_scenario(spec)?;
    let horizon = base.sim.duration;
    let since = disruption_at(&base);
    for &policy in &spec.policies {
        for &uavs in &spec.uav_counts {
            for &seed in &spec.seeds {
                let result = run_cell(&base, policy, uavs, seed)?;
                let dir = cell_dir(&spec.out_dir, policy, uavs, seed);
                export_run(&dir, policy.name(), uavs, seed, &result.ledger).map_err(|e| io_err(&dir, e))?;
                let ledger = &result.ledger;
                let mut line = format!(
                    "policy={} uavs={uavs} seed={seed} overall={:.6}",
                    policy.name(),
                    ledger.success_rate(None, None)
                );
                if let Some(t0) = since {
                    for (i, name) in ledger.town_names().iter().enumerate() {
                        let r = ledger.success_rate(Some(TownId(i as u32)), Some((t0, horizon)));
                        line.push_str(&format!(" {name}[{t0},{horizon})={r:.6}"));
                    }
                }
                writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))?;
            }
        }
    }
    Ok(())
}

/// Full factorial over policies, UAV counts and seeds, up to `jobs` cells at
/// a time, then `comparison.csv` from every cell's counts.
pub fn cmd_sweep(spec: &RunSpec, jobs: usize, resume: bool, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    validate_spec(spec)?;
    let base = base_scenario(spec)?;
    let mut cells = Vec::new();
    for &policy in &spec.policies {
        for &uavs in &spec.uav_counts {
            for &seed in &spec.seeds {
                cells.push((policy, uavs, seed));
            }
        }
    }
    let pending: Vec<_> = cells
        .iter()
        .copied()
        .filter(|&(p, u, s)| !(resume && cell_dir(&spec.out_dir, p, u, s).join("counts.csv").is_file()))
        .collect();
    writeln!(out, "{} cells, {} to run", cells.len(), pending.len()).map_err(|e| CliError::Io(e.to_string()))?;

    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<CliError>> = Mutex::new(None);
    let log = Mutex::new(out);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, pending.len().max(1)) {
            scope.spawn(|| loop {
                if failure.lock().expect("lock").is_some() {
                    return;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(policy, uavs, seed)) = pending.get(i) else { return };
                let dir = cell_dir(&spec.out_dir, policy, uavs, seed);
                let done = run_cell(&base, policy, uavs, seed).and_then(|r| {
                    export_run(&dir, policy.name(), uavs, seed, &r.ledger).map_err(|e| io_err(&dir, e))?;
                    Ok(r.ledger.success_rate(None, None))
                });
                match done {
                    Ok(rate) => {
                        let mut w = log.lock().expect("lock");
                        let _ = writeln!(w, "policy={} uavs={uavs} seed={seed} overall={rate:.6}", policy.name());
                    }
                    Err(e) => {
                        failure.lock().expect("lock").get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }

    let mut runs = BTreeMap::new();
    for &(policy, uavs, seed) in &cells {
        let path = cell_dir(&spec.out_dir, policy, uavs, seed).join("counts.csv");
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let summary: RunSummary =
            parse_counts_csv(&text).map_err(|m| CliError::Io(format!("{}: {m}", path.display())))?;
        runs.insert(
            CellKey {
                policy: policy.name().to_string(),
                uav_count: uavs,
                seed,
            },
            summary,
        );
    }
    let path = spec.out_dir.join("comparison.csv");
    write_atomic(&path, &comparison_csv(&runs)).map_err(|e| io_err(&path, e))?;
    Ok(())
}
