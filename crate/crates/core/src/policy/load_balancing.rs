//! Load balancing: UAVs go one by one to the town with the most tasks in
//! the last window, and each UAV sent discounts that town's count.

use alloc::vec::Vec;

use crate::domain::{HapSnapshot, RelocationCommand, TownId};

use super::allocate;

/// Sequence of towns picked for `picks` UAVs. Ties go to the lowest town id.
pub fn load_balancing_picks(counts: &[(TownId, f64)], decrement: f64, picks: usize) -> Vec<TownId> {
    let mut working: Vec<(TownId, f64)> = counts.to_vec();
    let mut out = Vec::with_capacity(picks);
    if working.is_empty() {
        return out;
    }
    for _ in 0..picks {
        let best = working
            .iter_mut()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        out.push(best.0);
        best.1 = (best.1 - decrement).max(0.0);
    }
    out
}

/// Tasks one UAV can absorb over the observation window at the window's
/// mean task size.
pub fn default_decrement(snapshot: &HapSnapshot) -> f64 {
    let uav_capacity = snapshot.uavs.first().map_or(0.0, |u| u.capacity);
    let (tasks, work) = snapshot.towns.iter().fold((0u64, 0.0), |(n, w), t| {
        (n + t.task_count, w + t.task_count as f64 * t.mean_cpu_demand)
    });
    if tasks == 0 || work <= 0.0 {
        return 1.0;
    }
    let mean_cpu = work / tasks as f64;
    (uav_capacity * snapshot.window / mean_cpu).max(1.0)
}

pub fn plan_load_balancing(snapshot: &HapSnapshot, decrement: f64) -> Vec<RelocationCommand> {
    let counts: Vec<(TownId, f64)> = snapshot
        .towns
        .iter()
        .map(|t| (t.town, t.task_count as f64))
        .collect();
    let picks = load_balancing_picks(&counts, decrement, snapshot.uavs.len());
    let mut quotas: Vec<(TownId, u32)> = Vec::new();
    for town in picks {
        match quotas.iter_mut().find(|(t, _)| *t == town) {
            Some((_, q)) => *q += 1,
            None => quotas.push((town, 1)),
        }
    }
    allocate(snapshot, &quotas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::tests::{destinations_per_town, snapshot, SnapshotSpec};

    fn counts(v: &[f64]) -> Vec<(TownId, f64)> {
        v.iter().enumerate().map(|(i, &c)| (TownId(i as u32), c)).collect()
    }

    #[test]
    fn greedy_trace() {
        let picks = load_balancing_picks(&counts(&[1000.0, 500.0, 200.0]), 400.0, 3);
        assert_eq!(picks, [TownId(0), TownId(0), TownId(1)]);
    }

    #[test]
    fn ties_pick_lowest_id() {
        let picks = load_balancing_picks(&counts(&[100.0, 100.0, 100.0]), 400.0, 1);
        assert_eq!(picks, [TownId(0)]);
        let picks = load_balancing_picks(&counts(&[0.0, 0.0, 0.0]), 400.0, 4);
        assert_eq!(picks, [TownId(0); 4]);
    }

    #[test]
    fn plan_sends_depot_uavs() {
        let snap = snapshot(&SnapshotSpec {
            towns: 3,
            depot_uavs: 3,
            counts: &[1000, 500, 200],
            ..Default::default()
        });
        let cmds = plan_load_balancing(&snap, 400.0);
        assert_eq!(destinations_per_town(&snap, &cmds), [2, 1, 0]);
        // first pick, first UAV
        assert_eq!(cmds[0].uav.0, 0);
        assert_eq!(snap.town_at(cmds[0].destination), Some(TownId(0)));
    }

    #[test]
    fn satisfied_residents_do_not_move() {
        let snap = snapshot(&SnapshotSpec {
            towns: 3,
            resident: &[(0, 2), (1, 1)],
            counts: &[1000, 500, 200],
            ..Default::default()
        });
        assert!(plan_load_balancing(&snap, 400.0).is_empty());
    }

    #[test]
    fn decrement_follows_uav_capacity() {
        let snap = snapshot(&SnapshotSpec {
            towns: 3,
            depot_uavs: 1,
            counts: &[9000, 9000, 9000],
            ..Default::default()
        });
        // 50_000 u/s over a 10 s window at 90 units per task
        assert!((default_decrement(&snap) - 50_000.0 * 10.0 / 90.0).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn picks_ignore_town_order(
            c in proptest::collection::vec(0u32..50, 1..6),
            decrement in 1u32..30,
            picks in 0usize..12,
            rot in 0usize..6,
        ) {
            let original: Vec<(TownId, f64)> = c.iter().enumerate().map(|(i, &x)| (TownId(i as u32), x as f64)).collect();
            let mut shuffled = original.clone();
            shuffled.rotate_left(rot % original.len());
            shuffled.reverse();
            let mut a = load_balancing_picks(&original, decrement as f64, picks);
            let mut b = load_balancing_picks(&shuffled, decrement as f64, picks);
            a.sort();
            b.sort();
            proptest::prop_assert_eq!(a, b);
        }
    }
}
