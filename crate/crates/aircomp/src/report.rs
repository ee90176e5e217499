//! CSV outputs. All rates carry six fractional digits, rows end in `\n`, and
//! every file is written to a temporary name first and then renamed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use aircomp_core::domain::TownId;
use aircomp_core::metrics::{compare_table, CellKey, MetricsLedger, OutcomeCounts, RunSummary, OVERALL};

pub const TIMESERIES_HEADER: &str = "bucket_start,town,created,succeeded,success_rate";
pub const SUMMARY_HEADER: &str = "policy,uav_count,seed,town,success_rate";
pub const COUNTS_HEADER: &str = "town,created,succeeded,failed_deadline,failed_no_resource,censored";
pub const COMPARISON_HEADER: &str = "policy,uav_count,seed,town,success_rate";

/// Seed column value of the across-seed mean rows in `comparison.csv`.
pub const MEAN_SEED: &str = "mean";

/// Writes `contents` to `path` via a sibling temporary file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

fn rate(x: f64) -> String {
    format!("{x:.6}")
}

/// Buckets in time order, towns by name within a bucket.
pub fn timeseries_csv(ledger: &MetricsLedger) -> String {
    let mut towns: Vec<(usize, &String)> = ledger.town_names().iter().enumerate().collect();
    towns.sort_by(|a, b| a.1.cmp(b.1));
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for b in 0..ledger.bucket_count() {
        for &(i, name) in &towns {
            let c = ledger.bucket(TownId(i as u32), b);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                ledger.bucket_start(b),
                name,
                c.created,
                c.succeeded,
                rate(c.success_rate())
            );
        }
    }
    out
}

pub fn summary_csv(policy: &str, uav_count: u32, seed: u64, summary: &RunSummary) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for (town, c) in summary.rows() {
        let _ = writeln!(out, "{policy},{uav_count},{seed},{town},{}", rate(c.success_rate()));
    }
    out
}

pub fn counts_csv(summary: &RunSummary) -> String {
    let mut out = String::from(COUNTS_HEADER);
    out.push('\n');
    for (town, c) in summary.rows() {
        let _ = writeln!(
            out,
            "{town},{},{},{},{},{}",
            c.created, c.succeeded, c.failed_deadline, c.failed_no_resource, c.censored
        );
    }
    out
}

/// Inverse of [`counts_csv`]. The overall row is dropped; it is derived.
pub fn parse_counts_csv(text: &str) -> Result<RunSummary, String> {
    let mut lines = text.lines();
    if lines.next() != Some(COUNTS_HEADER) {
        return Err("unexpected header".into());
    }
    let mut towns = Vec::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(format!("line {}: expected 6 fields", n + 2));
        }
        let num = |i: usize| f[i].parse::<u64>().map_err(|e| format!("line {}: {e}", n + 2));
        let c = OutcomeCounts {
            created: num(1)?,
            succeeded: num(2)?,
            failed_deadline: num(3)?,
            failed_no_resource: num(4)?,
            censored: num(5)?,
        };
        if f[0] != OVERALL {
            towns.push((f[0].to_string(), c));
        }
    }
    Ok(RunSummary { towns })
}

/// Per-run rows followed by the across-seed means of every
/// (policy, UAV count, town) cell.
pub fn comparison_csv(runs: &BTreeMap<CellKey, RunSummary>) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for (key, summary) in runs {
        for (town, c) in summary.rows() {
            let _ = writeln!(
                out,
                "{},{},{},{town},{}",
                key.policy,
                key.uav_count,
                key.seed,
                rate(c.success_rate())
            );
        }
    }
    for row in compare_table(runs) {
        let _ = writeln!(
            out,
            "{},{},{MEAN_SEED},{},{}",
            row.policy,
            row.uav_count,
            row.town,
            rate(row.mean_success_rate)
        );
    }
    out
}

/// Writes `timeseries.csv`, `summary.csv` and `counts.csv` into `dir`.
/// `counts.csv` goes last and marks the run as complete.
pub fn export_run(dir: &Path, policy: &str, uav_count: u32, seed: u64, ledger: &MetricsLedger) -> io::Result<()> {
    let summary = ledger.summary();
    write_atomic(&dir.join("timeseries.csv"), &timeseries_csv(ledger))?;
    write_atomic(&dir.join("summary.csv"), &summary_csv(policy, uav_count, seed, &summary))?;
    write_atomic(&dir.join("counts.csv"), &counts_csv(&summary))
}
