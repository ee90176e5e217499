use alloc::vec::Vec;

use rand::Rng;

use crate::domain::{HapSnapshot, RelocationCommand, TownId};

/// Draws a town for every stationed UAV. UAVs that drew the town they are
/// already in stay.
pub fn plan_random<R: Rng + ?Sized>(snapshot: &HapSnapshot, rng: &mut R) -> Vec<RelocationCommand> {
    let towns = snapshot.towns.len();
    if towns == 0 {
        return Vec::new();
    }
    snapshot
        .stationed_uavs()
        .filter_map(|uav| {
            let town = TownId(rng.gen_range(0..towns) as u32);
            (uav.town != Some(town)).then(|| RelocationCommand {
                uav: uav.id,
                destination: snapshot.towns[town.index()].center,
                issued_at: snapshot.taken_at,
            })
        })
        .collect()
}
