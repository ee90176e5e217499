//! Independent reference implementations used to check the simulator.
//!
//! Nothing here calls into the code under test except to feed it inputs:
//! brute-force k-means, a Lindley-recursion queue, and the closed forms.

#![allow(dead_code)]

use aircomp_core::domain::{ApplicationProfile, TownId};
use aircomp_core::geometry::Position;
use aircomp_core::policy::kmeans::{kmeans_detailed, wcss};
use aircomp_core::policy::lsi::{mm1_response_time, required_uavs, ResponseEstimate, TownLoadModel};
use aircomp_core::scenario::{build_default_earthquake, PopulationSpec};
use aircomp_core::{run, DeploymentPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lowest within-cluster sum of squares over every partition of `points`
/// into exactly `k` non-empty clusters.
pub fn brute_force_wcss(points: &[Position], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l].0 += p.x;
            sums[l].1 += p.y;
            sums[l].2 += 1;
        }
        if sums.iter().all(|s| s.2 > 0) {
            let cost: f64 = points
                .iter()
                .zip(&labels)
                .map(|(p, &l)| {
                    let (sx, sy, c) = sums[l];
                    let (mx, my) = (sx / c as f64, sy / c as f64);
                    (p.x - mx).powi(2) + (p.y - my).powi(2)
                })
                .sum();
            best = best.min(cost);
        }
        // odometer over k^n labelings
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Random instances: 1..=8 points on the integer 10x10 grid, 1 <= k <= 3.
pub fn kmeans_instances(count: usize, seed: u64) -> Vec<(Vec<Position>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=3usize);
            let n = rng.gen_range(k..=8usize);
            let pts = (0..n)
                .map(|_| Position::new(rng.gen_range(0..10) as f64, rng.gen_range(0..10) as f64))
                .collect();
            (pts, k)
        })
        .collect()
}

/// Instances whose k-means objective, best of `restarts` seeded runs, is
/// within `ratio` of the optimum.
pub fn kmeans_near_optimal(count: usize, restarts: u64, ratio: f64) -> usize {
    kmeans_instances(count, 7)
        .iter()
        .enumerate()
        .filter(|(i, (pts, k))| {
            let got = (0..restarts)
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(1000 * *i as u64 + r);
                    let c = kmeans_detailed(pts, *k, 50, &mut rng).expect("valid instance");
                    wcss(pts, &c.centroids, &c.assignments)
                })
                .fold(f64::INFINITY, f64::min);
            let opt = brute_force_wcss(pts, *k);
            got <= ratio * opt + 1e-9
        })
        .count()
}

/// Largest relative error of the estimator against `1 / (mu - lambda)` over
/// random stable pairs.
pub fn mm1_formula_max_error(pairs: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..pairs)
        .map(|_| {
            let capacity = rng.gen_range(1.0..1e6);
            let cpu = rng.gen_range(0.1..1e3);
            let mu = capacity / cpu;
            let lambda = mu * rng.gen_range(0.0..0.999);
            let model = TownLoadModel::new(TownId(0), lambda, cpu, capacity, 1.0);
            let want = 1.0 / (mu - lambda);
            match mm1_response_time(&model) {
                ResponseEstimate::Stable(t) => ((t - want) / want).abs(),
                ResponseEstimate::Unstable => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max)
}

/// Mean response time of a FIFO single-server queue with Poisson arrivals,
/// from the Lindley recursion. Service is exponential with rate `mu`, or
/// fixed at `1 / mu` when `deterministic`.
pub fn lindley_mean_response(lambda: f64, mu: f64, tasks: usize, deterministic: bool, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exp = |rate: f64| -(1.0 - rng.gen::<f64>()).ln() / rate;
    let mut wait = 0.0f64;
    let mut total = 0.0;
    for _ in 0..tasks {
        let service = if deterministic { 1.0 / mu } else { exp(mu) };
        total += wait + service;
        let gap = exp(lambda);
        wait = (wait + service - gap).max(0.0);
    }
    total / tasks as f64
}

/// Runs the simulator on one town at utilization `rho` with generous
/// deadlines and returns (mean response minus network delay, M/M/1
/// prediction, tasks measured).
pub fn engine_queue_response(rho: f64, duration: f64, seed: u64) -> (f64, f64, usize) {
    let mut s = build_default_earthquake(1);
    s.events.clear();
    s.uavs.count = 0;
    s.sim.duration = duration;
    s.sim.rng_seed = seed;
    s.sim.record_outcomes = true;
    let cpu = 90.0;
    let capacity = s.towns[1].edge.as_ref().expect("town has an edge").capacity;
    let wlan = s.towns[1].edge.as_ref().expect("town has an edge").wlan_delay;
    let mu = capacity / cpu;
    let users = 1000u32;
    let lambda = rho * mu;
    s.populations = vec![PopulationSpec {
        town: "T2".into(),
        count: users,
        profile: ApplicationProfile::new(cpu, 1e6, users as f64 / lambda).expect("valid profile"),
        active_from: 0.0,
    }];
    let out = run(s.instantiate(seed).expect("valid scenario"), &s.sim, &DeploymentPolicy::NoUav);
    let log = out.ledger.outcomes().expect("outcomes recorded");
    let times: Vec<f64> = log
        .iter()
        .filter_map(|r| r.completed_at.map(|c| c - r.created_at - 2.0 * wlan))
        .collect();
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    (mean, 1.0 / (mu - lambda), times.len())
}

/// Checks that `required_uavs` never drops when load grows, capacity
/// shrinks or the budget tightens. Returns the number of violations.
pub fn required_uavs_monotonicity_violations(models: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bad = 0;
    for _ in 0..models {
        let lambda = rng.gen_range(0.0..3000.0);
        let cpu = rng.gen_range(1.0..200.0);
        let cap = rng.gen_range(0.0..300_000.0);
        let delay = rng.gen_range(0.01..5.0);
        let uav = rng.gen_range(1_000.0..100_000.0);
        let base = required_uavs(&TownLoadModel::new(TownId(0), lambda, cpu, cap, delay), uav);
        let more_load = required_uavs(
            &TownLoadModel::new(TownId(0), lambda * rng.gen_range(1.0..2.0), cpu, cap, delay),
            uav,
        );
        let less_cap = required_uavs(
            &TownLoadModel::new(TownId(0), lambda, cpu, cap * rng.gen_range(0.0..1.0), delay),
            uav,
        );
        let tighter = required_uavs(
            &TownLoadModel::new(TownId(0), lambda, cpu, cap, delay * rng.gen_range(0.1..1.0)),
            uav,
        );
        if more_load < base || less_cap < base || tighter < base {
            bad += 1;
        }
    }
    bad
}
