//! Emergency deployment: every UAV goes to the centers of the users who
//! have lost all connectivity, found with k-means where k is the number of
//! towns with destroyed infrastructure.

use alloc::vec::Vec;

use rand::Rng;

use crate::domain::{HapSnapshot, RelocationCommand};
use crate::geometry::{horizontal_distance, Position};

use super::kmeans::kmeans;

#[derive(Debug, Clone, PartialEq)]
pub struct EmergencyParams {
    pub kmeans_iters: u32,
    pub k_override: Option<u32>,
    /// A stationed UAV within this distance (meters) of its target stays.
    pub reposition_threshold: f64,
}

impl Default for EmergencyParams {
    fn default() -> Self {
        Self {
            kmeans_iters: 50,
            k_override: None,
            reposition_threshold: 25.0,
        }
    }
}

/// Positions of active users with no eligible resource.
pub fn uncovered_users(snapshot: &HapSnapshot) -> Vec<Position> {
    snapshot.uncovered_users.iter().map(|(_, p)| *p).collect()
}

/// Number of clusters: one per town that lost its infrastructure and still
/// has uncovered users, at least one, never more than the points.
fn cluster_count(snapshot: &HapSnapshot, points: &[Position], params: &EmergencyParams) -> usize {
    let k = match params.k_override {
        Some(k) => k as usize,
        None => snapshot
            .towns
            .iter()
            .filter(|t| t.infrastructure_destroyed())
            .filter(|t| points.iter().any(|p| t.region().contains(*p)))
            .count(),
    };
    k.clamp(1, points.len())
}

pub fn plan_emergency<R: Rng + ?Sized>(
    snapshot: &HapSnapshot,
    params: &EmergencyParams,
    rng: &mut R,
) -> Vec<RelocationCommand> {
    let points = uncovered_users(snapshot);
    if points.is_empty() {
        return Vec::new();
    }
    let k = cluster_count(snapshot, &points, params);
    let centroids = kmeans(&points, k, params.kmeans_iters as usize, rng)
        .expect("1 <= k <= number of points");

    // Round-robin over centroids in UAV-id order, so surplus UAVs spread
    // evenly across the clusters.
    snapshot
        .uavs
        .iter()
        .enumerate()
        .filter_map(|(i, uav)| {
            let target = centroids[i % k];
            let settled = horizontal_distance(uav.position, target) <= params.reposition_threshold;
            (uav.is_stationed() && !settled).then_some(RelocationCommand {
                uav: uav.id,
                destination: target,
                issued_at: snapshot.taken_at,
            })
        })
        .collect()
}
