//! Simulation core for UAV-assisted edge computing in disaster scenarios.
//!
//! Users in a set of towns generate latency-bounded tasks that are offloaded
//! to the town's edge server or to a nearby UAV, whichever promises the
//! fastest response. A high-altitude controller periodically observes the
//! world and relocates UAVs according to a [`DeploymentPolicy`]. The crate
//! is `no_std` and only needs `alloc`; file formats and the command line
//! live in the `aircomp` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod domain;
pub mod engine;
pub mod geometry;
pub mod metrics;
pub mod offloading;
pub mod policy;
pub mod rng;
pub mod scenario;
pub mod world;

pub use domain::{
    in_uav_coverage, ApplicationProfile, EdgeServer, FlightState, HapSnapshot, RelocationCommand,
    Task, TaskOutcome, Town, TownId, Uav, UavId, User, UserId,
};
pub use engine::{run, EventQueue, RunOutput, SimConfig};
pub use geometry::{horizontal_distance, Position};
pub use metrics::{compare_table, CellKey, ComparisonRow, MetricsLedger, OutcomeCounts, RunSummary};
pub use offloading::ResourceRef;
pub use policy::{DeploymentPolicy, PolicyKind};
pub use scenario::{build_default_earthquake, Scenario, ScenarioError};
pub use world::WorldState;
