//! Declarative scenarios: towns, populations, the UAV fleet and timed world
//! mutations, plus the built-in earthquake scenario.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    ApplicationProfile, EdgeId, EdgeServer, FlightState, Task, TaskQueue, Town, TownId, Uav,
    UavId, UserId,
};
use crate::engine::SimConfig;
use crate::geometry::{Disk, Position};
use crate::world::WorldState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub capacity: f64,
    pub wlan_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TownSpec {
    pub id: String,
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavFleetSpec {
    pub count: u32,
    pub capacity: f64,
    pub coverage_radius: f64,
    pub altitude: f64,
    pub speed: f64,
    pub wlan_delay: f64,
    pub depot_x: f64,
    pub depot_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub town: String,
    pub count: u32,
    #[serde(flatten)]
    pub profile: ApplicationProfile,
    #[serde(default)]
    pub active_from: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimedEventKind {
    /// The town's edge server goes out of service for good; tasks still
    /// queued on it fail.
    DestroyEdge { town: String },
    /// New mean interarrival time for every existing user of the town.
    SetInterarrival { town: String, mean_interarrival: f64 },
    /// Additional users, active from the event time.
    SpawnUsers(PopulationSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub at: f64,
    #[serde(flatten)]
    pub kind: TimedEventKind,
}

/// Tuning knobs of the deployment policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyParams {
    /// Tasks subtracted from a town's count per UAV sent there. Derived
    /// from UAV capacity when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lb_decrement: Option<f64>,
    /// Observation window of the load-balancing counts, seconds. Defaults
    /// to the policy tick period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lb_window: Option<f64>,
    pub kmeans_iters: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_override: Option<u32>,
    /// A stationed UAV this close to its emergency target is not moved.
    pub reposition_threshold: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            lb_decrement: None,
            lb_window: None,
            kmeans_iters: 50,
            k_override: None,
            reposition_threshold: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sim: SimConfig,
    #[serde(default)]
    pub policy: PolicyParams,
    pub towns: Vec<TownSpec>,
    pub uavs: UavFleetSpec,
    #[serde(default)]
    pub populations: Vec<PopulationSpec>,
    #[serde(default)]
    pub events: Vec<TimedEvent>,
}

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", join(.0))]
    Validation(Vec<Violation>),
    #[error("unknown town {0:?}")]
    UnknownTown(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub const DEFAULT_USERS_PER_TOWN: u32 = 1000;
pub const DEFAULT_UAV_COUNT: u32 = 8;
pub const EARTHQUAKE_AT: f64 = 1000.0;
pub const USER_SURGE_AT: f64 = 2000.0;

fn profile(cpu: f64, budget: f64, interarrival: f64) -> ApplicationProfile {
    ApplicationProfile {
        cpu_demand: cpu,
        worst_case_delay: budget,
        mean_interarrival: interarrival,
    }
}

/// The three-town earthquake: Town-1 loses its edge server at 1000 s while
/// every town's usage triples, and each town's population doubles at 2000 s.
///
/// Panics if `users_per_town` is zero.
pub fn build_default_earthquake(users_per_town: u32) -> Scenario {
    assert!(users_per_town >= 1, "users_per_town must be at least 1");
    let names = ["T1", "T2", "T3"];
    let towns = names
        .iter()
        .enumerate()
        .map(|(i, id)| TownSpec {
            id: id.to_string(),
            center_x: 3000.0 * i as f64,
            center_y: 0.0,
            radius: 80.0,
            edge: Some(EdgeSpec {
                capacity: 100_000.0,
                wlan_delay: 0.001,
            }),
        })
        .collect();
    let initial = [
        profile(90.0, 1.0, 3.33),
        profile(90.0, 1.0, 3.33),
        profile(90.0, 2.0, 3.33),
    ];
    let populations = names
        .iter()
        .zip(initial)
        .map(|(town, p)| PopulationSpec {
            town: town.to_string(),
            count: users_per_town,
            profile: p,
            active_from: 0.0,
        })
        .collect();

    let mut events = Vec::new();
    events.push(TimedEvent {
        at: EARTHQUAKE_AT,
        kind: TimedEventKind::DestroyEdge {
            town: "T1".to_string(),
        },
    });
    for town in names {
        events.push(TimedEvent {
            at: EARTHQUAKE_AT,
            kind: TimedEventKind::SetInterarrival {
                town: town.to_string(),
                mean_interarrival: 1.0,
            },
        });
    }
    let surge = [
        profile(90.0, 1.0, 1.0),
        profile(90.0, 1.0, 1.0),
        profile(12.0, 5.0, 1.0),
    ];
    for (town, p) in names.iter().zip(surge) {
        events.push(TimedEvent {
            at: USER_SURGE_AT,
            kind: TimedEventKind::SpawnUsers(PopulationSpec {
                town: town.to_string(),
                count: users_per_town,
                profile: p,
                active_from: USER_SURGE_AT,
            }),
        });
    }

    Scenario {
        sim: SimConfig::default(),
        policy: PolicyParams::default(),
        towns,
        uavs: UavFleetSpec {
            count: DEFAULT_UAV_COUNT,
            capacity: 50_000.0,
            coverage_radius: 100.0,
            altitude: 200.0,
            speed: 20.0,
            wlan_delay: 0.005,
            depot_x: 3000.0,
            depot_y: 1000.0,
        },
        populations,
        events,
    }
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn fail(&mut self, field: String, message: impl Into<String>) {
        self.violations.push(Violation {
            field,
            message: message.into(),
        });
    }

    fn positive(&mut self, field: impl Into<String>, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.fail(field.into(), format!("must be positive and finite, got {v}"));
        }
    }

    fn non_negative(&mut self, field: impl Into<String>, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.fail(field.into(), format!("must be non-negative and finite, got {v}"));
        }
    }

    fn finite(&mut self, field: impl Into<String>, v: f64) {
        if !v.is_finite() {
            self.fail(field.into(), format!("must be finite, got {v}"));
        }
    }

    fn profile(&mut self, prefix: &str, p: &ApplicationProfile) {
        self.positive(format!("{prefix}.cpu_demand"), p.cpu_demand);
        self.positive(format!("{prefix}.worst_case_delay"), p.worst_case_delay);
        self.positive(format!("{prefix}.mean_interarrival"), p.mean_interarrival);
    }
}

impl Scenario {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut c = Checker {
            violations: Vec::new(),
        };
        let sim = &self.sim;
        c.positive("sim.duration", sim.duration);
        c.positive("sim.policy_tick_period", sim.policy_tick_period);
        c.positive("sim.metrics_bucket", sim.metrics_bucket);

        let p = &self.policy;
        if p.kmeans_iters < 1 {
            c.fail("policy.kmeans_iters".into(), "must be at least 1");
        }
        if let Some(d) = p.lb_decrement {
            c.positive("policy.lb_decrement", d);
        }
        if let Some(w) = p.lb_window {
            c.positive("policy.lb_window", w);
        }
        if p.k_override == Some(0) {
            c.fail("policy.k_override".into(), "must be at least 1");
        }
        c.non_negative("policy.reposition_threshold", p.reposition_threshold);

        if self.towns.is_empty() {
            c.fail("towns".into(), "at least one town is required");
        }
        for (i, t) in self.towns.iter().enumerate() {
            let f = format!("towns[{i}]");
            if self.towns[..i].iter().any(|o| o.id == t.id) {
                c.fail(format!("{f}.id"), format!("duplicate town id {:?}", t.id));
            }
            c.finite(format!("{f}.center_x"), t.center_x);
            c.finite(format!("{f}.center_y"), t.center_y);
            c.positive(format!("{f}.radius"), t.radius);
            if let Some(e) = &t.edge {
                c.positive(format!("{f}.edge.capacity"), e.capacity);
                c.non_negative(format!("{f}.edge.wlan_delay"), e.wlan_delay);
            }
            for (j, o) in self.towns[..i].iter().enumerate() {
                if town_disk(t).overlaps(&town_disk(o)) {
                    c.fail(f.clone(), format!("region overlaps towns[{j}] ({:?})", o.id));
                }
            }
        }

        let u = &self.uavs;
        c.positive("uavs.capacity", u.capacity);
        c.positive("uavs.coverage_radius", u.coverage_radius);
        c.non_negative("uavs.altitude", u.altitude);
        c.positive("uavs.speed", u.speed);
        c.non_negative("uavs.wlan_delay", u.wlan_delay);
        c.finite("uavs.depot_x", u.depot_x);
        c.finite("uavs.depot_y", u.depot_y);

        let known = |name: &str| self.towns.iter().any(|t| t.id == name);
        for (i, pop) in self.populations.iter().enumerate() {
            let f = format!("populations[{i}]");
            if !known(&pop.town) {
                c.fail(format!("{f}.town"), format!("unknown town {:?}", pop.town));
            }
            c.profile(&f, &pop.profile);
            c.non_negative(format!("{f}.active_from"), pop.active_from);
        }
        for (i, ev) in self.events.iter().enumerate() {
            let f = format!("events[{i}]");
            if !(ev.at.is_finite() && ev.at >= 0.0 && ev.at <= sim.duration) {
                c.fail(
                    format!("{f}.at"),
                    format!("must lie within [0, {}], got {}", sim.duration, ev.at),
                );
            }
            let town = match &ev.kind {
                TimedEventKind::DestroyEdge { town } => town,
                TimedEventKind::SetInterarrival {
                    town,
                    mean_interarrival,
                } => {
                    c.positive(format!("{f}.mean_interarrival"), *mean_interarrival);
                    town
                }
                TimedEventKind::SpawnUsers(pop) => {
                    c.profile(&f, &pop.profile);
                    c.non_negative(format!("{f}.active_from"), pop.active_from);
                    &pop.town
                }
            };
            if !known(town) {
                c.fail(format!("{f}.town"), format!("unknown town {town:?}"));
            }
        }

        if c.violations.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Validation(c.violations))
        }
    }

    /// Validates the scenario and builds the initial world for `seed`.
    /// UAVs start stationed at the depot.
    pub fn instantiate(&self, seed: u64) -> Result<WorldState, ScenarioError> {
        self.validate()?;
        let mut world = WorldState::empty(seed);
        world.wlan_round_trip = self.sim.wlan_round_trip;
        for (i, t) in self.towns.iter().enumerate() {
            let id = TownId(i as u32);
            let edge_server = t.edge.as_ref().map(|e| {
                let edge = EdgeId(world.edges.len() as u32);
                world.edges.push(EdgeServer {
                    id: edge,
                    town: id,
                    capacity: e.capacity,
                    wlan_delay: e.wlan_delay,
                    operational: true,
                    queue: TaskQueue::default(),
                });
                edge
            });
            world.towns.push(Town {
                id,
                name: t.id.clone(),
                center: Position::new(t.center_x, t.center_y),
                radius: t.radius,
                edge_server,
            });
        }
        let depot = Position::new(self.uavs.depot_x, self.uavs.depot_y);
        for i in 0..self.uavs.count {
            world.uavs.push(Uav {
                id: UavId(i),
                position: depot,
                altitude: self.uavs.altitude,
                capacity: self.uavs.capacity,
                coverage_radius: self.uavs.coverage_radius,
                speed: self.uavs.speed,
                wlan_delay: self.uavs.wlan_delay,
                flight_state: FlightState::Stationed,
                queue: TaskQueue::default(),
            });
        }
        for pop in &self.populations {
            let town = world.town_named(&pop.town).expect("validated");
            for _ in 0..pop.count {
                world.add_user(town, pop.profile, pop.active_from);
            }
        }
        world.timeline = self.events.clone();
        Ok(world)
    }
}

fn town_disk(t: &TownSpec) -> Disk {
    Disk {
        center: Position::new(t.center_x, t.center_y),
        radius: t.radius,
    }
}

/// What applying a timed event changed, for the engine to follow up on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventEffect {
    /// Tasks dropped from a destroyed queue, already failed.
    pub failed: Vec<Task>,
    /// Newly created users whose first arrival must be scheduled.
    pub spawned: Vec<UserId>,
}

/// Applies `event` to the world at `world.clock`.
pub fn apply_event(world: &mut WorldState, event: &TimedEvent) -> Result<EventEffect, ScenarioError> {
    let lookup = |world: &WorldState, name: &str| {
        world
            .town_named(name)
            .ok_or_else(|| ScenarioError::UnknownTown(name.to_string()))
    };
    let now = world.clock;
    let mut effect = EventEffect::default();
    match &event.kind {
        TimedEventKind::DestroyEdge { town } => {
            let town = lookup(world, town)?;
            if let Some(edge) = world.towns[town.index()].edge_server {
                let edge = &mut world.edges[edge.index()];
                edge.operational = false;
                effect.failed.extend(edge.queue.drain().map(|q| {
                    let mut task = q.task;
                    task.fail_no_resource(now);
                    task
                }));
            }
        }
        TimedEventKind::SetInterarrival {
            town,
            mean_interarrival,
        } => {
            let town = lookup(world, town)?;
            for user in world.users.iter_mut().filter(|u| u.town == town) {
                user.profile.mean_interarrival = *mean_interarrival;
            }
        }
        TimedEventKind::SpawnUsers(pop) => {
            let town = lookup(world, &pop.town)?;
            let active_from = pop.active_from.max(event.at);
            for _ in 0..pop.count {
                effect.spawned.push(world.add_user(town, pop.profile, active_from));
            }
        }
    }
    Ok(effect)
}
