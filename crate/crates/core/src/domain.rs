//! Shared domain types: towns, users, tasks, compute resources and the
//! controller's view of the world.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{horizontal_distance, Disk, Position};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident($inner:ty)) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub $inner);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Index of a town in `WorldState::towns`.
    TownId(u32)
);
id_type!(UserId(u32));
id_type!(UavId(u32));
id_type!(
    /// Index of an edge server in `WorldState::edges`.
    EdgeId(u32)
);
id_type!(TaskId(u64));

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{field} must be positive and finite, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("position ({x}, {y}) is not finite")]
    NonFinitePosition { x: f64, y: f64 },
}

pub(crate) fn check_positive(field: &'static str, value: f64) -> Result<f64, DomainError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(DomainError::NotPositive { field, value })
    }
}

/// Workload of one application type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApplicationProfile {
    /// CPU-units per task.
    pub cpu_demand: f64,
    /// Latency budget of a task, seconds.
    pub worst_case_delay: f64,
    /// Mean time between two tasks of one user, seconds.
    pub mean_interarrival: f64,
}

impl ApplicationProfile {
    pub fn new(
        cpu_demand: f64,
        worst_case_delay: f64,
        mean_interarrival: f64,
    ) -> Result<Self, DomainError> {
        Ok(Self {
            cpu_demand: check_positive("cpu_demand", cpu_demand)?,
            worst_case_delay: check_positive("worst_case_delay", worst_case_delay)?,
            mean_interarrival: check_positive("mean_interarrival", mean_interarrival)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskOutcome {
    Pending,
    Success,
    FailedDeadline,
    FailedNoResource,
}

impl TaskOutcome {
    /// Deadline check for a task that came back. The budget is inclusive.
    pub fn classify(created_at: f64, completed_at: f64, worst_case_delay: f64) -> Self {
        if completed_at - created_at <= worst_case_delay {
            TaskOutcome::Success
        } else {
            TaskOutcome::FailedDeadline
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub owner: UserId,
    pub town: TownId,
    pub cpu_demand: f64,
    pub created_at: f64,
    pub worst_case_delay: f64,
    pub completed_at: Option<f64>,
    pub outcome: TaskOutcome,
}

impl Task {
    pub fn new(id: TaskId, user: &User, created_at: f64) -> Self {
        Self {
            id,
            owner: user.id,
            town: user.town,
            cpu_demand: user.profile.cpu_demand,
            created_at,
            worst_case_delay: user.profile.worst_case_delay,
            completed_at: None,
            outcome: TaskOutcome::Pending,
        }
    }

    /// Result delivered back to the user at `now`.
    pub fn finish(&mut self, now: f64) -> TaskOutcome {
        debug_assert!(now >= self.created_at);
        self.completed_at = Some(now);
        self.outcome = TaskOutcome::classify(self.created_at, now, self.worst_case_delay);
        self.outcome
    }

    pub fn fail_no_resource(&mut self, now: f64) {
        self.completed_at = Some(now);
        self.outcome = TaskOutcome::FailedNoResource;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub id: UserId,
    pub town: TownId,
    pub position: Position,
    pub profile: ApplicationProfile,
    pub active_from: f64,
}

impl User {
    pub fn is_active(&self, now: f64) -> bool {
        self.active_from <= now
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Town {
    pub id: TownId,
    /// Human-readable identifier used in scenario files and reports.
    pub name: String,
    pub center: Position,
    pub radius: f64,
    pub edge_server: Option<EdgeId>,
}

impl Town {
    pub fn region(&self) -> Disk {
        Disk {
            center: self.center,
            radius: self.radius,
        }
    }
}

/// A task waiting for or receiving service, together with its precomputed
/// timeline. Service is FIFO and non-preemptive, so both instants are fixed
/// the moment the task joins the queue.
#[derive(Debug, Clone, PartialEq)]
pub struct QueuedTask {
    pub task: Task,
    pub service_end: f64,
    /// Instant the result reaches the user.
    pub delivered_at: f64,
}

/// FIFO queue of a compute resource, served one task at a time at full
/// capacity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskQueue {
    entries: VecDeque<QueuedTask>,
    busy_until: f64,
}

impl TaskQueue {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn head(&self) -> Option<&QueuedTask> {
        self.entries.front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueuedTask> {
        self.entries.iter()
    }

    /// Seconds of work still ahead of a task that joins at `now`.
    pub fn backlog_time(&self, now: f64) -> f64 {
        if self.busy_until > now {
            self.busy_until - now
        } else {
            0.0
        }
    }

    /// Remaining CPU-units in the queue, including the task in service.
    pub fn backlog_work(&self, now: f64, capacity: f64) -> f64 {
        self.backlog_time(now) * capacity
    }

    pub(crate) fn push(
        &mut self,
        task: Task,
        now: f64,
        capacity: f64,
        network_delay: f64,
    ) -> &QueuedTask {
        let start = self.busy_until.max(now);
        let service_end = start + task.cpu_demand / capacity;
        self.busy_until = service_end;
        self.entries.push_back(QueuedTask {
            task,
            service_end,
            delivered_at: service_end + network_delay,
        });
        self.entries.back().expect("just pushed")
    }

    pub(crate) fn pop_head(&mut self) -> Option<QueuedTask> {
        self.entries.pop_front()
    }

    pub(crate) fn drain(&mut self) -> impl Iterator<Item = QueuedTask> + '_ {
        self.busy_until = 0.0;
        self.entries.drain(..)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeServer {
    pub id: EdgeId,
    pub town: TownId,
    /// CPU-units per second.
    pub capacity: f64,
    /// One-way WLAN delay, seconds.
    pub wlan_delay: f64,
    pub operational: bool,
    pub queue: TaskQueue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FlightState {
    Stationed,
    Flying { destination: Position, arrival_at: f64 },
}

impl FlightState {
    pub fn is_stationed(&self) -> bool {
        matches!(self, FlightState::Stationed)
    }
}

/// A flying edge server.
#[derive(Debug, Clone, PartialEq)]
pub struct Uav {
    pub id: UavId,
    pub position: Position,
    /// Descriptive only; coverage and delay are horizontal/fixed.
    pub altitude: f64,
    pub capacity: f64,
    pub coverage_radius: f64,
    pub speed: f64,
    pub wlan_delay: f64,
    pub flight_state: FlightState,
    pub queue: TaskQueue,
}

/// Whether `user` can offload to `uav` right now.
pub fn in_uav_coverage(user: &User, uav: &Uav) -> bool {
    uav.flight_state.is_stationed()
        && horizontal_distance(user.position, uav.position) <= uav.coverage_radius
}

/// Per-town aggregates the HAP controller sees at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TownObservation {
    pub town: TownId,
    pub center: Position,
    pub radius: f64,
    /// Tasks generated in the town during the observation window.
    pub task_count: u64,
    /// Tasks per second over the observation window.
    pub arrival_rate: f64,
    /// Mean CPU-units of the window's tasks; zero when there were none.
    pub mean_cpu_demand: f64,
    /// Strictest worst-case delay among active users, if any.
    pub min_required_delay: Option<f64>,
    /// Capacity of the town's own operational edge server (zero if none).
    pub edge_capacity: f64,
    /// Edge plus stationed UAVs inside the town.
    pub operational_capacity: f64,
}

impl TownObservation {
    pub fn region(&self) -> Disk {
        Disk {
            center: self.center,
            radius: self.radius,
        }
    }

    pub fn infrastructure_destroyed(&self) -> bool {
        self.edge_capacity <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavObservation {
    pub id: UavId,
    pub position: Position,
    pub flight_state: FlightState,
    pub capacity: f64,
    /// Town the UAV is stationed in.
    pub town: Option<TownId>,
    /// Town the UAV is stationed in or flying to.
    pub committed_town: Option<TownId>,
}

impl UavObservation {
    pub fn is_stationed(&self) -> bool {
        self.flight_state.is_stationed()
    }
}

/// What the HAP controller knows when it plans.
#[derive(Debug, Clone, PartialEq)]
pub struct HapSnapshot {
    pub taken_at: f64,
    /// Length of the observation window behind the counts, seconds.
    pub window: f64,
    /// Ordered by town id.
    pub towns: Vec<TownObservation>,
    /// Active users without any eligible resource.
    pub uncovered_users: Vec<(UserId, Position)>,
    /// Ordered by UAV id.
    pub uavs: Vec<UavObservation>,
}

impl HapSnapshot {
    pub fn stationed_uavs(&self) -> impl Iterator<Item = &UavObservation> {
        self.uavs.iter().filter(|u| u.is_stationed())
    }

    pub fn town_at(&self, p: Position) -> Option<TownId> {
        self.towns
            .iter()
            .find(|t| t.region().contains(p))
            .map(|t| t.town)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelocationCommand {
    pub uav: UavId,
    pub destination: Position,
    pub issued_at: f64,
}
