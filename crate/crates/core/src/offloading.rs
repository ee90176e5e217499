//! Task offloading: every task goes to the eligible resource with the
//! smallest estimated response time, and resources serve their queues FIFO.
//!
//! A task's place in the queue is fixed at the offload instant. Its result
//! reaches the user once service ends plus the WLAN time of the resource,
//! so the estimate the user acts on equals the response time it gets unless
//! the resource is destroyed first.

use alloc::vec::Vec;

use crate::domain::{in_uav_coverage, EdgeId, Task, TaskId, TaskOutcome, TaskQueue, UavId, User};
use crate::world::WorldState;

/// A compute resource a task can be sent to. Variant order is the
/// tie-break order: the edge server first, then UAVs by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceRef {
    Edge(EdgeId),
    Uav(UavId),
}

fn resource_parts(world: &WorldState, resource: ResourceRef) -> (&TaskQueue, f64, f64) {
    match resource {
        ResourceRef::Edge(id) => {
            let e = &world.edges[id.index()];
            (&e.queue, e.capacity, e.wlan_delay)
        }
        ResourceRef::Uav(id) => {
            let u = &world.uavs[id.index()];
            (&u.queue, u.capacity, u.wlan_delay)
        }
    }
}

fn edge_of(user: &User, world: &WorldState) -> Option<EdgeId> {
    world.towns[user.town.index()]
        .edge_server
        .filter(|id| world.edges[id.index()].operational)
}

fn covering_uavs<'a>(user: &'a User, world: &'a WorldState) -> impl Iterator<Item = UavId> + 'a {
    world
        .uavs
        .iter()
        .filter(move |uav| in_uav_coverage(user, uav))
        .map(|uav| uav.id)
}

/// Resources `user` can reach right now, edge first then UAVs by id.
pub fn eligible_resources(user: &User, world: &WorldState) -> Vec<ResourceRef> {
    edge_of(user, world)
        .map(ResourceRef::Edge)
        .into_iter()
        .chain(covering_uavs(user, world).map(ResourceRef::Uav))
        .collect()
}

pub fn has_eligible_resource(user: &User, world: &WorldState) -> bool {
    edge_of(user, world).is_some() || covering_uavs(user, world).next().is_some()
}

/// Queueing delay + service time + WLAN time, as seen at `world.clock`.
pub fn estimate_response_time(resource: ResourceRef, task: &Task, world: &WorldState) -> f64 {
    let (queue, capacity, wlan) = resource_parts(world, resource);
    queue.backlog_work(world.clock, capacity) / capacity
        + task.cpu_demand / capacity
        + world.network_delay(wlan)
}

fn best_resource(user: &User, task: &Task, world: &WorldState) -> Option<ResourceRef> {
    let mut best: Option<(ResourceRef, f64)> = None;
    let candidates = edge_of(user, world)
        .map(ResourceRef::Edge)
        .into_iter()
        .chain(covering_uavs(user, world).map(ResourceRef::Uav));
    for r in candidates {
        let rt = estimate_response_time(r, task, world);
        if best.is_none_or(|(_, b)| rt < b) {
            best = Some((r, rt));
        }
    }
    best.map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Offload {
    Enqueued {
        resource: ResourceRef,
        task: TaskId,
        delivered_at: f64,
        /// The queue was empty, so this task is now in service and its
        /// completion must be scheduled.
        in_service: bool,
    },
    /// No eligible resource; the task has been failed at its creation time.
    NoResource(Task),
}

/// Sends a freshly created task to the best eligible resource.
pub fn offload(mut task: Task, world: &mut WorldState) -> Offload {
    let user = &world.users[task.owner.index()];
    let Some(resource) = best_resource(user, &task, world) else {
        task.fail_no_resource(task.created_at);
        return Offload::NoResource(task);
    };
    let now = world.clock;
    let round_trip = world.wlan_round_trip;
    let network = |w: f64| if round_trip { w } else { 2.0 * w };
    let id = task.id;
    let (queue, capacity, delay) = match resource {
        ResourceRef::Edge(e) => {
            let edge = &mut world.edges[e.index()];
            let d = network(edge.wlan_delay);
            (&mut edge.queue, edge.capacity, d)
        }
        ResourceRef::Uav(u) => {
            let uav = &mut world.uavs[u.index()];
            assert!(
                uav.flight_state.is_stationed(),
                "task offloaded to flying UAV {}",
                uav.id
            );
            let d = network(uav.wlan_delay);
            (&mut uav.queue, uav.capacity, d)
        }
    };
    let in_service = queue.is_empty();
    let queued = queue.push(task, now, capacity, delay);
    Offload::Enqueued {
        resource,
        task: id,
        delivered_at: queued.delivered_at,
        in_service,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub task: Task,
    pub outcome: TaskOutcome,
    /// The next task now in service and when its result is delivered.
    pub next: Option<(TaskId, f64)>,
}

fn queue_mut(world: &mut WorldState, resource: ResourceRef) -> &mut TaskQueue {
    match resource {
        ResourceRef::Edge(id) => &mut world.edges[id.index()].queue,
        ResourceRef::Uav(id) => &mut world.uavs[id.index()].queue,
    }
}

/// Delivers the head task of `resource` at `now` and classifies it.
///
/// Returns `None` when `task` is no longer the head, which happens for
/// completions scheduled on a queue that was later dropped.
pub fn complete(
    world: &mut WorldState,
    resource: ResourceRef,
    task: TaskId,
    now: f64,
) -> Option<Completion> {
    let queue = queue_mut(world, resource);
    if queue.head().map(|h| h.task.id) != Some(task) {
        return None;
    }
    let mut done = queue.pop_head().expect("head checked").task;
    let outcome = done.finish(now);
    let next = queue.head().map(|h| (h.task.id, h.delivered_at));
    Some(Completion {
        task: done,
        outcome,
        next,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        ApplicationProfile, EdgeServer, FlightState, Town, TownId, Uav, UserId,
    };
    use crate::geometry::Position;
    use alloc::string::ToString;
    use alloc::vec;

    fn world(edge_operational: bool, uavs: &[(f64, bool)]) -> WorldState {
        let mut w = WorldState::empty(1);
        w.towns.push(Town {
            id: TownId(0),
            name: "T1".to_string(),
            center: Position::new(0.0, 0.0),
            radius: 80.0,
            edge_server: Some(EdgeId(0)),
        });
        w.edges.push(EdgeServer {
            id: EdgeId(0),
            town: TownId(0),
            capacity: 100_000.0,
            wlan_delay: 0.001,
            operational: edge_operational,
            queue: TaskQueue::default(),
        });
        for (i, &(x, stationed)) in uavs.iter().enumerate() {
            w.uavs.push(Uav {
                id: UavId(i as u32),
                position: Position::new(x, 0.0),
                altitude: 200.0,
                capacity: 50_000.0,
                coverage_radius: 100.0,
                speed: 20.0,
                wlan_delay: 0.005,
                flight_state: if stationed {
                    FlightState::Stationed
                } else {
                    FlightState::Flying {
                        destination: Position::new(1000.0, 0.0),
                        arrival_at: 100.0,
                    }
                },
                queue: TaskQueue::default(),
            });
        }
        w.users.push(User {
            id: UserId(0),
            town: TownId(0),
            position: Position::new(0.0, 0.0),
            profile: ApplicationProfile::new(90.0, 1.0, 3.33).unwrap(),
            active_from: 0.0,
        });
        w
    }

    fn task(w: &WorldState, id: u64, cpu: f64) -> Task {
        let mut t = Task::new(TaskId(id), &w.users[0], w.clock);
        t.cpu_demand = cpu;
        t
    }

    #[test]
    fn eligibility_examples() {
        let w = world(true, &[]);
        assert_eq!(eligible_resources(&w.users[0], &w), vec![ResourceRef::Edge(EdgeId(0))]);
        let w = world(false, &[]);
        assert!(eligible_resources(&w.users[0], &w).is_empty());
        let w = world(false, &[(50.0, true)]);
        assert_eq!(eligible_resources(&w.users[0], &w), vec![ResourceRef::Uav(UavId(0))]);
        let w = world(true, &[(150.0, true), (10.0, false), (20.0, true)]);
        assert_eq!(
            eligible_resources(&w.users[0], &w),
            vec![ResourceRef::Edge(EdgeId(0)), ResourceRef::Uav(UavId(2))]
        );
    }

    #[test]
    fn estimate_examples() {
        let mut w = world(true, &[(0.0, true)]);
        let t = task(&w, 0, 90.0);
        let edge = ResourceRef::Edge(EdgeId(0));
        let uav = ResourceRef::Uav(UavId(0));
        assert!((estimate_response_time(edge, &t, &w) - 0.0029).abs() < 1e-12);

        let backlog = task(&w, 1, 9000.0);
        w.edges[0].queue.push(backlog, 0.0, 100_000.0, 0.002);
        assert!((estimate_response_time(edge, &t, &w) - 0.0929).abs() < 1e-12);

        let backlog = task(&w, 2, 50_000.0);
        w.uavs[0].queue.push(backlog, 0.0, 50_000.0, 0.010);
        assert!((estimate_response_time(uav, &t, &w) - 1.0118).abs() < 1e-12);

        match offload(t, &mut w) {
            Offload::Enqueued { resource, .. } => assert_eq!(resource, edge),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn offload_without_resource_fails_at_creation() {
        let mut w = world(false, &[]);
        w.clock = 12.5;
        let t = task(&w, 0, 90.0);
        match offload(t, &mut w) {
            Offload::NoResource(t) => {
                assert_eq!(t.outcome, TaskOutcome::FailedNoResource);
                assert_eq!(t.completed_at, Some(12.5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_tie_goes_to_edge() {
        // Same capacity and delay on both resources gives identical estimates.
        let mut w = world(true, &[(0.0, true)]);
        w.uavs[0].capacity = 100_000.0;
        w.uavs[0].wlan_delay = 0.001;
        let t = task(&w, 0, 90.0);
        let edge = ResourceRef::Edge(EdgeId(0));
        let uav = ResourceRef::Uav(UavId(0));
        assert_eq!(
            estimate_response_time(edge, &t, &w),
            estimate_response_time(uav, &t, &w)
        );
        match offload(t, &mut w) {
            Offload::Enqueued { resource, .. } => assert_eq!(resource, edge),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn realized_response_matches_estimate() {
        let mut w = world(true, &[]);
        let mut expected = Vec::new();
        for i in 0..5 {
            w.clock = i as f64 * 0.0004;
            let t = task(&w, i, 90.0);
            expected.push((w.clock, estimate_response_time(ResourceRef::Edge(EdgeId(0)), &t, &w)));
            offload(t, &mut w);
        }
        let deliveries: Vec<f64> = w.edges[0].queue.iter().map(|q| q.delivered_at).collect();
        for ((created, est), delivered) in expected.into_iter().zip(deliveries) {
            assert!((delivered - created - est).abs() < 1e-12);
        }
    }

    #[test]
    fn completion_walks_queue_in_order() {
        let mut w = world(true, &[]);
        let r = ResourceRef::Edge(EdgeId(0));
        let mut first = None;
        for i in 0..3 {
            if let Offload::Enqueued { delivered_at, in_service, .. } = offload(task(&w, i, 90.0), &mut w) {
                assert_eq!(in_service, i == 0);
                first.get_or_insert(delivered_at);
            }
        }
        assert!(complete(&mut w, r, TaskId(1), 0.1).is_none());
        let c = complete(&mut w, r, TaskId(0), first.unwrap()).unwrap();
        assert_eq!(c.outcome, TaskOutcome::Success);
        assert_eq!(c.next.map(|n| n.0), Some(TaskId(1)));
        assert_eq!(w.edges[0].queue.len(), 2);
    }

    #[test]
    fn complete_classifies_late_results() {
        let mut w = world(true, &[]);
        w.clock = 10.0;
        let r = ResourceRef::Edge(EdgeId(0));
        offload(task(&w, 0, 90.0), &mut w);
        let c = complete(&mut w, r, TaskId(0), 11.2).unwrap();
        assert_eq!(c.outcome, TaskOutcome::FailedDeadline);
        assert_eq!(c.task.completed_at, Some(11.2));
    }
}
