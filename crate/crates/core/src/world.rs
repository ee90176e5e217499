use alloc::vec::Vec;

use crate::domain::{
    ApplicationProfile, EdgeServer, TownId, Town, Uav, User, UserId,
};
use crate::geometry::Position;
use crate::rng::{substream, Stream};
use crate::scenario::TimedEvent;

/// Complete mutable state of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub clock: f64,
    /// Seed the world was built from; spawned users draw their placement
    /// from it.
    pub seed: u64,
    /// When set, a resource's `wlan_delay` already covers upload and
    /// return. Otherwise it is one-way and paid twice.
    pub wlan_round_trip: bool,
    pub towns: Vec<Town>,
    pub users: Vec<User>,
    pub edges: Vec<EdgeServer>,
    pub uavs: Vec<Uav>,
    /// Scenario events still to be applied, in file order.
    pub timeline: Vec<TimedEvent>,
}

impl WorldState {
    pub fn empty(seed: u64) -> Self {
        Self {
            clock: 0.0,
            seed,
            wlan_round_trip: false,
            towns: Vec::new(),
            users: Vec::new(),
            edges: Vec::new(),
            uavs: Vec::new(),
            timeline: Vec::new(),
        }
    }

    /// Total WLAN time a task pays on a resource with the given delay.
    pub fn network_delay(&self, wlan_delay: f64) -> f64 {
        if self.wlan_round_trip {
            wlan_delay
        } else {
            2.0 * wlan_delay
        }
    }

    pub fn town_named(&self, name: &str) -> Option<TownId> {
        self.towns.iter().find(|t| t.name == name).map(|t| t.id)
    }

    pub fn town_at(&self, p: Position) -> Option<TownId> {
        self.towns.iter().find(|t| t.region().contains(p)).map(|t| t.id)
    }

    pub fn active_users(&self) -> impl Iterator<Item = &User> {
        let now = self.clock;
        self.users.iter().filter(move |u| u.is_active(now))
    }

    /// Places a new user uniformly inside the town.
    pub fn add_user(
        &mut self,
        town: TownId,
        profile: ApplicationProfile,
        active_from: f64,
    ) -> UserId {
        let id = UserId(self.users.len() as u32);
        let mut rng = substream(self.seed, Stream::UserPlacement, id.0 as u64);
        let position = self.towns[town.index()].region().sample(&mut rng);
        self.users.push(User {
            id,
            town,
            position,
            profile,
            active_from,
        });
        id
    }
}
