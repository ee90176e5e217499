//! Location Selection Index: per-town UAV requirements from an M/M/1 view of
//! the town's load against the strictest latency budget in the town.

use alloc::vec::Vec;

use crate::domain::{HapSnapshot, RelocationCommand, TownId, TownObservation};

use super::allocate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TownLoadModel {
    pub town: TownId,
    /// Tasks per second.
    pub lambda: f64,
    /// CPU-units per task.
    pub mean_cpu: f64,
    /// CPU-units per second.
    pub capacity: f64,
    /// Tasks per second the capacity can serve.
    pub mu: f64,
    /// Seconds.
    pub required_delay: f64,
}

impl TownLoadModel {
    pub fn new(town: TownId, lambda: f64, mean_cpu: f64, capacity: f64, required_delay: f64) -> Self {
        let mu = if mean_cpu > 0.0 {
            capacity / mean_cpu
        } else if capacity > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        Self {
            town,
            lambda,
            mean_cpu,
            capacity,
            mu,
            required_delay,
        }
    }

    /// Model of a town's own infrastructure from the controller's view.
    /// `None` when the town has no active users.
    pub fn observe(town: &TownObservation) -> Option<Self> {
        town.min_required_delay.map(|d| {
            Self::new(
                town.town,
                town.arrival_rate,
                town.mean_cpu_demand,
                town.edge_capacity,
                d,
            )
        })
    }

    /// CPU-units per second needed for the mean response to meet the
    /// required delay.
    pub fn required_capacity(&self) -> f64 {
        (self.lambda + 1.0 / self.required_delay) * self.mean_cpu
    }

    pub fn capacity_deficit(&self) -> f64 {
        (self.required_capacity() - self.capacity).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseEstimate {
    Stable(f64),
    Unstable,
}

/// Mean M/M/1 response time `1 / (mu - lambda)`.
pub fn mm1_response_time(model: &TownLoadModel) -> ResponseEstimate {
    if model.mu > model.lambda {
        ResponseEstimate::Stable(1.0 / (model.mu - model.lambda))
    } else {
        ResponseEstimate::Unstable
    }
}

/// UAVs of `uav_capacity` to add on top of the modelled capacity.
pub fn required_uavs(model: &TownLoadModel, uav_capacity: f64) -> u32 {
    if model.lambda <= 0.0 {
        return 0;
    }
    let fast_enough = matches!(
        mm1_response_time(model),
        ResponseEstimate::Stable(t) if t <= model.required_delay
    );
    let enough_capacity = model.lambda * model.mean_cpu <= model.capacity;
    if fast_enough && enough_capacity {
        return 0;
    }
    libm::ceil(model.capacity_deficit() / uav_capacity) as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TownRequirement {
    pub town: TownId,
    pub uavs: u32,
    /// Ranking key: towns with a larger deficit are served first.
    pub deficit: f64,
}

/// Requirement of every town, in allocation order.
pub fn town_requirements(snapshot: &HapSnapshot) -> Vec<TownRequirement> {
    let uav_capacity = snapshot.uavs.first().map_or(0.0, |u| u.capacity);
    let mut reqs: Vec<TownRequirement> = snapshot
        .towns
        .iter()
        .filter_map(TownLoadModel::observe)
        .map(|m| {
            let uavs = if uav_capacity > 0.0 {
                required_uavs(&m, uav_capacity)
            } else {
                0
            };
            TownRequirement {
                town: m.town,
                uavs,
                deficit: if uavs > 0 { m.capacity_deficit() } else { 0.0 },
            }
        })
        .collect();
    reqs.sort_by(|a, b| b.deficit.total_cmp(&a.deficit).then(a.town.cmp(&b.town)));
    reqs
}

pub fn plan_lsi(snapshot: &HapSnapshot) -> Vec<RelocationCommand> {
    allocate_requirements(snapshot, &town_requirements(snapshot))
}

/// Fills requirements in the given order. UAVs already in a town count
/// toward it; UAVs nobody needs stay where they are.
pub fn allocate_requirements(
    snapshot: &HapSnapshot,
    requirements: &[TownRequirement],
) -> Vec<RelocationCommand> {
    let quotas: Vec<(TownId, u32)> = requirements
        .iter()
        .filter(|r| r.uavs > 0)
        .map(|r| (r.town, r.uavs))
        .collect();
    allocate(snapshot, &quotas)
}
