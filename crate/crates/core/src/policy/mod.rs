//! UAV deployment policies run by the HAP controller.
//!
//! Every policy maps a [`HapSnapshot`] to relocation commands. Flying UAVs
//! are never redirected, and a UAV that already satisfies its assignment is
//! left where it is.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::domain::{HapSnapshot, RelocationCommand, TownId, UavObservation};
use crate::scenario::PolicyParams;

pub mod emergency;
pub mod kmeans;
pub mod load_balancing;
pub mod lsi;
pub mod random;

pub use emergency::{plan_emergency, uncovered_users, EmergencyParams};
pub use kmeans::{kmeans, kmeans_detailed, Clustering, KMeansError};
pub use load_balancing::{default_decrement, load_balancing_picks, plan_load_balancing};
pub use lsi::{mm1_response_time, plan_lsi, required_uavs, ResponseEstimate, TownLoadModel};
pub use random::plan_random;

pub const POLICY_NAMES: [&str; 5] = ["none", "random", "load-balancing", "emergency", "lsi"];

#[derive(Debug, Clone, PartialEq)]
pub enum DeploymentPolicy {
    NoUav,
    Random,
    LoadBalancing {
        /// Tasks subtracted per UAV sent; derived from UAV capacity when
        /// `None`.
        decrement: Option<f64>,
        /// Observation window, seconds; the tick period when `None`.
        window: Option<f64>,
    },
    Emergency(EmergencyParams),
    Lsi,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown policy {name:?}; expected one of: none, random, load-balancing, emergency, lsi")]
pub struct UnknownPolicy {
    pub name: alloc::string::String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    None,
    Random,
    LoadBalancing,
    Emergency,
    Lsi,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::None,
        PolicyKind::Random,
        PolicyKind::LoadBalancing,
        PolicyKind::Emergency,
        PolicyKind::Lsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::None => "none",
            PolicyKind::Random => "random",
            PolicyKind::LoadBalancing => "load-balancing",
            PolicyKind::Emergency => "emergency",
            PolicyKind::Lsi => "lsi",
        }
    }

    /// Concrete policy using the scenario's tuning knobs.
    pub fn with_params(self, params: &PolicyParams) -> DeploymentPolicy {
        match self {
            PolicyKind::None => DeploymentPolicy::NoUav,
            PolicyKind::Random => DeploymentPolicy::Random,
            PolicyKind::LoadBalancing => DeploymentPolicy::LoadBalancing {
                decrement: params.lb_decrement,
                window: params.lb_window,
            },
            PolicyKind::Emergency => DeploymentPolicy::Emergency(EmergencyParams {
                kmeans_iters: params.kmeans_iters.max(1),
                k_override: params.k_override,
                reposition_threshold: params.reposition_threshold,
            }),
            PolicyKind::Lsi => DeploymentPolicy::Lsi,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownPolicy { name: s.into() })
    }
}

impl DeploymentPolicy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            DeploymentPolicy::NoUav => PolicyKind::None,
            DeploymentPolicy::Random => PolicyKind::Random,
            DeploymentPolicy::LoadBalancing { .. } => PolicyKind::LoadBalancing,
            DeploymentPolicy::Emergency(_) => PolicyKind::Emergency,
            DeploymentPolicy::Lsi => PolicyKind::Lsi,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Observation window the policy wants behind its snapshot counts.
    pub fn observation_window(&self) -> Option<f64> {
        match self {
            DeploymentPolicy::LoadBalancing { window, .. } => *window,
            _ => None,
        }
    }

    /// Relocation commands for the current snapshot.
    pub fn plan<R: Rng + ?Sized>(&self, snapshot: &HapSnapshot, rng: &mut R) -> Vec<RelocationCommand> {
        if snapshot.stationed_uavs().next().is_none() {
            return Vec::new();
        }
        let commands = match self {
            DeploymentPolicy::NoUav => Vec::new(),
            DeploymentPolicy::Random => plan_random(snapshot, rng),
            DeploymentPolicy::LoadBalancing { decrement, .. } => {
                let d = decrement.unwrap_or_else(|| default_decrement(snapshot));
                plan_load_balancing(snapshot, d)
            }
            DeploymentPolicy::Emergency(params) => plan_emergency(snapshot, params, rng),
            DeploymentPolicy::Lsi => plan_lsi(snapshot),
        };
        debug_assert!(commands.iter().all(|c| snapshot.uavs[c.uav.index()].is_stationed()));
        commands
    }
}

fn command(snapshot: &HapSnapshot, uav: &UavObservation, town: TownId) -> RelocationCommand {
    RelocationCommand {
        uav: uav.id,
        destination: snapshot.towns[town.index()].center,
        issued_at: snapshot.taken_at,
    }
}

/// Sends UAVs so that each listed town ends up with its quota, filling towns
/// in list order.
///
/// UAVs stationed in or flying to a town are kept there first. Missing UAVs
/// come from stationed UAVs outside every town, then from UAVs a town does
/// not need, lowest id first. UAVs left over stay put.
pub(crate) fn allocate(snapshot: &HapSnapshot, quotas: &[(TownId, u32)]) -> Vec<RelocationCommand> {
    let mut kept = alloc::vec![false; snapshot.uavs.len()];
    let mut missing = Vec::with_capacity(quotas.len());
    for &(town, quota) in quotas {
        let mut have = 0;
        for (i, uav) in snapshot.uavs.iter().enumerate() {
            if have == quota {
                break;
            }
            if !kept[i] && uav.committed_town == Some(town) {
                kept[i] = true;
                have += 1;
            }
        }
        missing.push((town, quota - have));
    }

    let spare = |outside: bool| {
        snapshot
            .uavs
            .iter()
            .enumerate()
            .filter(|(i, u)| !kept[*i] && u.is_stationed() && u.committed_town.is_none() == outside)
            .map(|(_, u)| u)
            .collect::<Vec<_>>()
    };
    let mut pool = spare(true).into_iter().chain(spare(false));
    let mut commands = Vec::new();
    'towns: for (town, n) in missing {
        for _ in 0..n {
            let Some(uav) = pool.next() else { break 'towns };
            commands.push(command(snapshot, uav, town));
        }
    }
    commands
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::domain::{FlightState, TownObservation, UavId, UserId};
    use crate::geometry::Position;
    use alloc::vec;

    #[derive(Default)]
    pub(crate) struct SnapshotSpec<'a> {
        pub towns: usize,
        pub depot_uavs: usize,
        /// (town, count) stationed at the town center.
        pub resident: &'a [(usize, usize)],
        /// (town, count) currently flying to the town.
        pub inbound: &'a [(usize, usize)],
        pub counts: &'a [u64],
        pub destroyed: &'a [usize],
        pub uncovered: &'a [(f64, f64)],
    }

    pub(crate) fn center(i: usize) -> Position {
        Position::new(3000.0 * i as f64, 0.0)
    }

    pub(crate) fn snapshot(spec: &SnapshotSpec<'_>) -> HapSnapshot {
        let towns = (0..spec.towns)
            .map(|i| {
                let count = spec.counts.get(i).copied().unwrap_or(0);
                let edge = if spec.destroyed.contains(&i) { 0.0 } else { 100_000.0 };
                TownObservation {
                    town: TownId(i as u32),
                    center: center(i),
                    radius: 80.0,
                    task_count: count,
                    arrival_rate: count as f64 / 10.0,
                    mean_cpu_demand: if count > 0 { 90.0 } else { 0.0 },
                    min_required_delay: Some(1.0),
                    edge_capacity: edge,
                    operational_capacity: edge,
                }
            })
            .collect();
        let mut uavs = Vec::new();
        let mut push = |position, flight_state, town, committed| {
            uavs.push(UavObservation {
                id: UavId(uavs.len() as u32),
                position,
                flight_state,
                capacity: 50_000.0,
                town,
                committed_town: committed,
            })
        };
        for _ in 0..spec.depot_uavs {
            push(Position::new(3000.0, 1000.0), FlightState::Stationed, None, None);
        }
        for &(t, n) in spec.resident {
            let id = Some(TownId(t as u32));
            for _ in 0..n {
                push(center(t), FlightState::Stationed, id, id);
            }
        }
        for &(t, n) in spec.inbound {
            let state = FlightState::Flying {
                destination: center(t),
                arrival_at: 100.0,
            };
            for _ in 0..n {
                push(Position::new(3000.0, 1000.0), state, None, Some(TownId(t as u32)));
            }
        }
        HapSnapshot {
            taken_at: 10.0,
            window: 10.0,
            towns,
            uncovered_users: spec
                .uncovered
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| (UserId(i as u32), Position::new(x, y)))
                .collect(),
            uavs,
        }
    }

    pub(crate) fn destinations_per_town(snap: &HapSnapshot, cmds: &[RelocationCommand]) -> Vec<usize> {
        let mut per = vec![0; snap.towns.len()];
        for c in cmds {
            per[snap.town_at(c.destination).expect("destination inside a town").index()] += 1;
        }
        per
    }

    fn all_policies() -> Vec<DeploymentPolicy> {
        PolicyKind::ALL
            .iter()
            .map(|k| k.with_params(&PolicyParams::default()))
            .collect()
    }

    #[test]
    fn no_uav_never_moves_anything() {
        let snap = snapshot(&SnapshotSpec {
            towns: 3,
            depot_uavs: 5,
            counts: &[100, 200, 300],
            destroyed: &[0],
            uncovered: &[(0.0, 0.0)],
            ..Default::default()
        });
        let mut rng = crate::rng::substream(1, crate::rng::Stream::Policy, 0);
        assert!(DeploymentPolicy::NoUav.plan(&snap, &mut rng).is_empty());
    }

    #[test]
    fn nothing_to_do_without_stationed_uavs() {
        let snap = snapshot(&SnapshotSpec {
            towns: 3,
            inbound: &[(1, 4)],
            counts: &[1000, 0, 0],
            destroyed: &[0],
            uncovered: &[(0.0, 0.0), (5.0, 5.0)],
            ..Default::default()
        });
        let mut rng = crate::rng::substream(1, crate::rng::Stream::Policy, 0);
        for p in all_policies() {
            assert!(p.plan(&snap, &mut rng).is_empty(), "{}", p.name());
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!(POLICY_NAMES.map(|n| n.parse::<PolicyKind>().unwrap()), PolicyKind::ALL);
        assert!("bogus".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn flying_uavs_are_kept_for_their_destination() {
        let snap = snapshot(&SnapshotSpec {
            towns: 2,
            depot_uavs: 2,
            inbound: &[(0, 1)],
            ..Default::default()
        });
        let cmds = allocate(&snap, &[(TownId(0), 2), (TownId(1), 1)]);
        assert_eq!(destinations_per_town(&snap, &cmds), [1, 1]);
    }

    #[test]
    fn surplus_residents_are_moved_before_idle_depot_is_exhausted() {
        // Depot UAVs go first; residents of a town without quota move after.
        let snap = snapshot(&SnapshotSpec {
            towns: 2,
            depot_uavs: 1,
            resident: &[(1, 2)],
            ..Default::default()
        });
        let cmds = allocate(&snap, &[(TownId(0), 2)]);
        assert_eq!(cmds[0].uav, UavId(0));
        assert_eq!(cmds[1].uav, UavId(1));
    }

    proptest::proptest! {
        #[test]
        fn policies_only_command_stationed_uavs(
            depot in 0usize..5,
            res0 in 0usize..4,
            res2 in 0usize..4,
            inbound in 0usize..4,
            c0 in 0u64..20_000,
            c1 in 0u64..20_000,
            c2 in 0u64..20_000,
            destroyed in proptest::bool::ANY,
            uncovered in proptest::collection::vec((-80.0f64..80.0, -80.0f64..80.0), 0..30),
            seed in 0u64..1000,
        ) {
            let snap = snapshot(&SnapshotSpec {
                towns: 3,
                depot_uavs: depot,
                resident: &[(0, res0), (2, res2)],
                inbound: &[(1, inbound)],
                counts: &[c0, c1, c2],
                destroyed: if destroyed { &[0] } else { &[] },
                uncovered: &uncovered,
            });
            let mut rng = crate::rng::substream(seed, crate::rng::Stream::Policy, 0);
            for p in all_policies() {
                let cmds = p.plan(&snap, &mut rng);
                let mut seen = Vec::new();
                for c in &cmds {
                    proptest::prop_assert!(snap.uavs[c.uav.index()].is_stationed());
                    proptest::prop_assert!(!seen.contains(&c.uav), "two commands for one UAV");
                    proptest::prop_assert!(c.destination.is_finite());
                    seen.push(c.uav);
                }
            }
        }
    }
}
