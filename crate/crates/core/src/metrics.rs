//! Task outcome bookkeeping.
//!
//! Tasks are bucketed by creation time. A task still in service when the
//! run ends is either failed (its budget had already run out) or counted as
//! censored and left out of every success-rate denominator.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{Task, TaskId, TaskOutcome, TownId};

/// Label of the all-towns row in reports.
pub const OVERALL: &str = "ALL";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub created: u64,
    pub succeeded: u64,
    pub failed_deadline: u64,
    pub failed_no_resource: u64,
    pub censored: u64,
}

impl OutcomeCounts {
    /// Tasks with a known outcome.
    pub fn resolved(&self) -> u64 {
        self.created - self.censored
    }

    /// Fraction of resolved tasks that met their deadline; 1.0 when nothing
    /// was resolved.
    pub fn success_rate(&self) -> f64 {
        match self.resolved() {
            0 => 1.0,
            n => self.succeeded as f64 / n as f64,
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.created
            == self.succeeded + self.failed_deadline + self.failed_no_resource + self.censored
    }

    pub fn add(&mut self, other: &OutcomeCounts) {
        self.created += other.created;
        self.succeeded += other.succeeded;
        self.failed_deadline += other.failed_deadline;
        self.failed_no_resource += other.failed_no_resource;
        self.censored += other.censored;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub task: TaskId,
    pub town: TownId,
    pub created_at: f64,
    pub completed_at: Option<f64>,
    /// `Pending` marks a censored task.
    pub outcome: TaskOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLedger {
    town_names: Vec<String>,
    bucket_width: f64,
    bucket_count: usize,
    /// Town-major: `town * bucket_count + bucket`.
    buckets: Vec<OutcomeCounts>,
    outcomes: Option<Vec<OutcomeRecord>>,
}

impl MetricsLedger {
    /// `keep_outcomes` additionally retains one record per task.
    pub fn new(town_names: Vec<String>, duration: f64, bucket_width: f64, keep_outcomes: bool) -> Self {
        // a run of zero length has no buckets; tasks cannot exist then
        let bucket_count = libm::ceil(duration / bucket_width).max(0.0) as usize;
        Self {
            buckets: vec![OutcomeCounts::default(); town_names.len() * bucket_count],
            town_names,
            bucket_width,
            bucket_count,
            outcomes: keep_outcomes.then(Vec::new),
        }
    }

    pub fn town_names(&self) -> &[String] {
        &self.town_names
    }

    pub fn bucket_width(&self) -> f64 {
        self.bucket_width
    }

    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    pub fn bucket_start(&self, index: usize) -> f64 {
        index as f64 * self.bucket_width
    }

    fn slot(&self, town: TownId, created_at: f64) -> usize {
        let b = (libm::floor(created_at / self.bucket_width) as usize).min(self.bucket_count.saturating_sub(1));
        town.index() * self.bucket_count + b
    }

    pub fn record_created(&mut self, town: TownId, created_at: f64) {
        let s = self.slot(town, created_at);
        self.buckets[s].created += 1;
    }

    /// Records the final outcome of a task; `Pending` counts as censored.
    pub fn record_outcome(&mut self, task: &Task) {
        let s = self.slot(task.town, task.created_at);
        let b = &mut self.buckets[s];
        match task.outcome {
            TaskOutcome::Success => b.succeeded += 1,
            TaskOutcome::FailedDeadline => b.failed_deadline += 1,
            TaskOutcome::FailedNoResource => b.failed_no_resource += 1,
            TaskOutcome::Pending => b.censored += 1,
        }
        if let Some(log) = &mut self.outcomes {
            log.push(OutcomeRecord {
                task: task.id,
                town: task.town,
                created_at: task.created_at,
                completed_at: task.completed_at,
                outcome: task.outcome,
            });
        }
    }

    pub fn bucket(&self, town: TownId, index: usize) -> OutcomeCounts {
        self.buckets[town.index() * self.bucket_count + index]
    }

    /// Totals over the matching towns and buckets. Intervals resolve at
    /// bucket granularity: a bucket matches when its start lies in `[t0, t1)`.
    pub fn counts(&self, town: Option<TownId>, interval: Option<(f64, f64)>) -> OutcomeCounts {
        let mut total = OutcomeCounts::default();
        for (t, _) in self.town_names.iter().enumerate() {
            if town.is_some_and(|x| x.index() != t) {
                continue;
            }
            for b in 0..self.bucket_count {
                let start = self.bucket_start(b);
                if interval.is_some_and(|(t0, t1)| start < t0 || start >= t1) {
                    continue;
                }
                total.add(&self.buckets[t * self.bucket_count + b]);
            }
        }
        total
    }

    pub fn success_rate(&self, town: Option<TownId>, interval: Option<(f64, f64)>) -> f64 {
        self.counts(town, interval).success_rate()
    }

    pub fn outcomes(&self) -> Option<&[OutcomeRecord]> {
        self.outcomes.as_deref()
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            towns: self
                .town_names
                .iter()
                .enumerate()
                .map(|(i, name)| (name.clone(), self.counts(Some(TownId(i as u32)), None)))
                .collect(),
        }
    }
}

/// Whole-run counts per town.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub towns: Vec<(String, OutcomeCounts)>,
}

impl RunSummary {
    pub fn overall(&self) -> OutcomeCounts {
        let mut total = OutcomeCounts::default();
        for (_, c) in &self.towns {
            total.add(c);
        }
        total
    }

    /// Per-town rows followed by the overall row.
    pub fn rows(&self) -> impl Iterator<Item = (&str, OutcomeCounts)> {
        self.towns
            .iter()
            .map(|(n, c)| (n.as_str(), *c))
            .chain(core::iter::once((OVERALL, self.overall())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub policy: String,
    pub uav_count: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub policy: String,
    pub uav_count: u32,
    pub town: String,
    pub seeds: usize,
    pub mean_success_rate: f64,
}

/// Mean success rate across seeds for every (policy, UAV count, town),
/// including the overall row. Rows come out sorted by policy, UAV count,
/// then town in input order with the overall row last.
pub fn compare_table(runs: &BTreeMap<CellKey, RunSummary>) -> Vec<ComparisonRow> {
    let mut cells: BTreeMap<(&str, u32), Vec<&RunSummary>> = BTreeMap::new();
    for (key, summary) in runs {
        cells
            .entry((key.policy.as_str(), key.uav_count))
            .or_default()
            .push(summary);
    }
    let mut rows = Vec::new();
    for ((policy, uav_count), summaries) in cells {
        let mut per_town: Vec<(String, Vec<f64>)> = Vec::new();
        for s in &summaries {
            for (town, counts) in s.rows() {
                match per_town.iter_mut().find(|(t, _)| t == town) {
                    Some((_, rates)) => rates.push(counts.success_rate()),
                    None => per_town.push((town.into(), vec![counts.success_rate()])),
                }
            }
        }
        // keep the overall row last even if towns differ between seeds
        if let Some(i) = per_town.iter().position(|(t, _)| t == OVERALL) {
            let all = per_town.remove(i);
            per_town.push(all);
        }
        for (town, rates) in per_town {
            rows.push(ComparisonRow {
                policy: policy.into(),
                uav_count,
                town,
                seeds: rates.len(),
                mean_success_rate: rates.iter().sum::<f64>() / rates.len() as f64,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::UserId;
    use alloc::string::ToString;

    fn task(town: u32, created: f64, outcome: TaskOutcome) -> Task {
        Task {
            id: TaskId(0),
            owner: UserId(0),
            town: TownId(town),
            cpu_demand: 90.0,
            created_at: created,
            worst_case_delay: 1.0,
            completed_at: None,
            outcome,
        }
    }

    fn ledger() -> MetricsLedger {
        MetricsLedger::new(
            ["T1", "T2"].iter().map(|s| s.to_string()).collect(),
            400.0,
            100.0,
            true,
        )
    }

    fn log(l: &mut MetricsLedger, town: u32, created: f64, outcome: TaskOutcome) {
        l.record_created(TownId(town), created);
        l.record_outcome(&task(town, created, outcome));
    }

    #[test]
    fn empty_ledger_is_vacuously_successful() {
        assert_eq!(ledger().success_rate(None, None), 1.0);
    }

    #[test]
    fn rate_counts_successes() {
        let mut l = ledger();
        for i in 0..100 {
            let o = if i < 80 { TaskOutcome::Success } else { TaskOutcome::FailedDeadline };
            log(&mut l, 0, i as f64, o);
        }
        assert_eq!(l.success_rate(None, None), 0.8);
        assert_eq!(l.success_rate(Some(TownId(1)), None), 1.0);
    }

    #[test]
    fn censored_tasks_leave_the_denominator() {
        let mut l = ledger();
        log(&mut l, 0, 10.0, TaskOutcome::Success);
        log(&mut l, 0, 399.0, TaskOutcome::Pending);
        let c = l.counts(None, None);
        assert_eq!(c.censored, 1);
        assert!(c.is_conserved());
        assert_eq!(c.success_rate(), 1.0);
    }

    #[test]
    fn intervals_select_buckets_by_creation_time() {
        let mut l = ledger();
        log(&mut l, 0, 50.0, TaskOutcome::Success);
        log(&mut l, 0, 150.0, TaskOutcome::FailedNoResource);
        log(&mut l, 1, 250.0, TaskOutcome::Success);
        assert_eq!(l.success_rate(Some(TownId(0)), Some((100.0, 400.0))), 0.0);
        assert_eq!(l.counts(None, Some((100.0, 300.0))).created, 2);
        assert_eq!(l.bucket(TownId(1), 2).succeeded, 1);
        assert_eq!(l.outcomes().unwrap().len(), 3);
    }

    #[test]
    fn overall_rate_is_task_weighted() {
        let mut l = ledger();
        for i in 0..30 {
            log(&mut l, 0, i as f64, if i < 10 { TaskOutcome::Success } else { TaskOutcome::FailedDeadline });
        }
        for i in 0..10 {
            log(&mut l, 1, i as f64, TaskOutcome::Success);
        }
        let s = l.summary();
        let weighted = s
            .towns
            .iter()
            .map(|(_, c)| c.success_rate() * c.resolved() as f64)
            .sum::<f64>()
            / s.overall().resolved() as f64;
        assert!((s.overall().success_rate() - weighted).abs() < 1e-15);
        assert_eq!(s.overall().success_rate(), 0.5);
    }

    fn summary(rate_num: u64, created: u64) -> RunSummary {
        RunSummary {
            towns: vec![(
                "T1".to_string(),
                OutcomeCounts {
                    created,
                    succeeded: rate_num,
                    failed_deadline: created - rate_num,
                    ..Default::default()
                },
            )],
        }
    }

    fn key(policy: &str, uavs: u32, seed: u64) -> CellKey {
        CellKey {
            policy: policy.to_string(),
            uav_count: uavs,
            seed,
        }
    }

    #[test]
    fn compare_single_ledger_keeps_its_rates() {
        let mut runs = BTreeMap::new();
        runs.insert(key("lsi", 4, 1), summary(3, 4));
        let rows = compare_table(&runs);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].town, "T1");
        assert_eq!(rows[0].mean_success_rate, 0.75);
        assert_eq!(rows[1].town, OVERALL);
    }

    #[test]
    fn compare_averages_seeds() {
        let mut runs = BTreeMap::new();
        runs.insert(key("lsi", 4, 1), summary(6, 10));
        runs.insert(key("lsi", 4, 2), summary(8, 10));
        runs.insert(key("random", 4, 1), summary(1, 10));
        let rows = compare_table(&runs);
        let lsi = rows.iter().find(|r| r.policy == "lsi" && r.town == "T1").unwrap();
        assert!((lsi.mean_success_rate - 0.7).abs() < 1e-15);
        assert_eq!(lsi.seeds, 2);
        let random = rows.iter().find(|r| r.policy == "random" && r.town == "T1").unwrap();
        assert_eq!(random.mean_success_rate, 0.1);
    }
}
