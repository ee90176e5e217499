//! Discrete-event engine.
//!
//! Events are dispatched in timestamp order, ties in scheduling order. A run
//! is single-threaded and fully determined by the world, the configuration
//! and the policy: every user draws arrivals from its own seeded stream and
//! the controller draws from another.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    FlightState, HapSnapshot, RelocationCommand, Task, TaskId, TaskOutcome, TownObservation,
    UavId, UavObservation, UserId,
};
use crate::geometry::horizontal_distance;
use crate::metrics::MetricsLedger;
use crate::offloading::{self, has_eligible_resource, Offload, ResourceRef};
use crate::policy::DeploymentPolicy;
use crate::rng::{sample_interarrival, substream, SimRng, Stream};
use crate::scenario::apply_event;
use crate::world::WorldState;

use rand::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Seconds of simulated time.
    pub duration: f64,
    /// Seconds between two HAP decisions.
    pub policy_tick_period: f64,
    /// Width of a metrics bucket, seconds.
    pub metrics_bucket: f64,
    #[serde(rename = "seed")]
    pub rng_seed: u64,
    /// Fixed spacing between a user's tasks instead of exponential gaps.
    #[serde(default)]
    pub deterministic_arrivals: bool,
    /// Treat configured WLAN delays as round-trip instead of one-way.
    #[serde(default)]
    pub wlan_round_trip: bool,
    /// Keep one record per task in the ledger.
    #[serde(default)]
    pub record_outcomes: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 4000.0,
            policy_tick_period: 10.0,
            metrics_bucket: 100.0,
            rng_seed: 1,
            deterministic_arrivals: false,
            wlan_round_trip: false,
            record_outcomes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    TaskArrival { user: UserId },
    TaskCompletion { resource: ResourceRef, task: TaskId },
    UavArrival { uav: UavId },
    PolicyTick,
    /// Index into the world's timeline.
    ScenarioEvent { event: usize },
    MetricsFlush,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub at: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so the max-heap yields the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EngineError {
    #[error("cannot schedule an event at {at} s, clock is already at {clock} s")]
    SchedulingInPast { at: f64, clock: f64 },
}

/// Pending events plus the simulation clock.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    clock: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, at: f64, kind: EventKind) -> Result<u64, EngineError> {
        // also rejects NaN
        if at.partial_cmp(&self.clock).is_none_or(Ordering::is_lt) {
            return Err(EngineError::SchedulingInPast {
                at,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { at, seq, kind });
        Ok(seq)
    }

    /// Removes the next event if it is due no later than `until` and moves
    /// the clock to it.
    pub fn pop_until(&mut self, until: f64) -> Option<Event> {
        if self.heap.peek()?.at > until {
            return None;
        }
        let ev = self.heap.pop()?;
        debug_assert!(ev.at >= self.clock);
        self.clock = ev.at;
        Some(ev)
    }
}

/// Per-town task counts over the controller's observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowCounts {
    /// Seconds covered by the counts.
    pub window: f64,
    /// (tasks, total CPU-units) per town.
    pub per_town: Vec<(u64, f64)>,
}

/// Builds the controller's view of `world` at `world.clock`.
pub fn hap_snapshot(world: &WorldState, counts: &WindowCounts) -> HapSnapshot {
    let now = world.clock;
    let mut towns: Vec<TownObservation> = world
        .towns
        .iter()
        .map(|t| {
            let (n, work) = counts.per_town.get(t.id.index()).copied().unwrap_or((0, 0.0));
            let edge_capacity = t
                .edge_server
                .map(|e| &world.edges[e.index()])
                .filter(|e| e.operational)
                .map_or(0.0, |e| e.capacity);
            TownObservation {
                town: t.id,
                center: t.center,
                radius: t.radius,
                task_count: n,
                arrival_rate: if counts.window > 0.0 { n as f64 / counts.window } else { 0.0 },
                mean_cpu_demand: if n > 0 { work / n as f64 } else { 0.0 },
                min_required_delay: None,
                edge_capacity,
                operational_capacity: edge_capacity,
            }
        })
        .collect();
    for u in world.active_users() {
        let slot = &mut towns[u.town.index()].min_required_delay;
        let d = u.profile.worst_case_delay;
        *slot = Some(slot.map_or(d, |s: f64| s.min(d)));
    }
    let uavs: Vec<UavObservation> = world
        .uavs
        .iter()
        .map(|u| {
            let town = match u.flight_state {
                FlightState::Stationed => world.town_at(u.position),
                FlightState::Flying { .. } => None,
            };
            let committed_town = match u.flight_state {
                FlightState::Stationed => town,
                FlightState::Flying { destination, .. } => world.town_at(destination),
            };
            UavObservation {
                id: u.id,
                position: u.position,
                flight_state: u.flight_state,
                capacity: u.capacity,
                town,
                committed_town,
            }
        })
        .collect();
    for u in &uavs {
        if let Some(t) = u.town {
            towns[t.index()].operational_capacity += u.capacity;
        }
    }
    let uncovered_users = world
        .active_users()
        .filter(|u| !has_eligible_resource(u, world))
        .map(|u| (u.id, u.position))
        .collect();
    HapSnapshot {
        taken_at: now,
        window: counts.window,
        towns,
        uncovered_users,
        uavs,
    }
}

/// Sliding window of per-tick task counts.
struct Observer {
    current: Vec<(u64, f64)>,
    history: VecDeque<Vec<(u64, f64)>>,
    ticks: usize,
    period: f64,
}

impl Observer {
    fn new(towns: usize, window: f64, period: f64) -> Self {
        Self {
            current: vec![(0, 0.0); towns],
            history: VecDeque::new(),
            ticks: (libm::ceil(window / period) as usize).max(1),
            period,
        }
    }

    fn record(&mut self, town: usize, cpu: f64) {
        let c = &mut self.current[town];
        c.0 += 1;
        c.1 += cpu;
    }

    /// Closes the current tick interval and returns the window totals.
    fn rotate(&mut self) -> WindowCounts {
        let fresh = vec![(0, 0.0); self.current.len()];
        self.history.push_back(core::mem::replace(&mut self.current, fresh));
        while self.history.len() > self.ticks {
            self.history.pop_front();
        }
        let mut per_town = vec![(0u64, 0.0f64); self.current.len()];
        for interval in &self.history {
            for (acc, x) in per_town.iter_mut().zip(interval) {
                acc.0 += x.0;
                acc.1 += x.1;
            }
        }
        WindowCounts {
            window: self.history.len() as f64 * self.period,
            per_town,
        }
    }
}

/// FNV-1a over the dispatched event sequence.
#[derive(Debug, Clone, Copy)]
struct TraceHash(u64);

impl TraceHash {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    fn word(&mut self, w: u64) {
        for b in w.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn event(&mut self, ev: &Event) {
        self.word(ev.at.to_bits());
        self.word(ev.seq);
        let (tag, a, b) = match ev.kind {
            EventKind::TaskArrival { user } => (0, user.0 as u64, 0),
            EventKind::TaskCompletion { resource, task } => match resource {
                ResourceRef::Edge(e) => (1, e.0 as u64, task.0),
                ResourceRef::Uav(u) => (2, u.0 as u64, task.0),
            },
            EventKind::UavArrival { uav } => (3, uav.0 as u64, 0),
            EventKind::PolicyTick => (4, 0, 0),
            EventKind::ScenarioEvent { event } => (5, event as u64, 0),
            EventKind::MetricsFlush => (6, 0, 0),
        };
        self.word(tag);
        self.word(a);
        self.word(b);
    }
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ledger: MetricsLedger,
    /// Hash of the dispatched event sequence.
    pub trace_hash: u64,
    pub events_dispatched: u64,
    pub commands_issued: u64,
    /// World at the end of the run.
    pub world: WorldState,
}

struct Engine<'a> {
    world: WorldState,
    config: &'a SimConfig,
    policy: &'a DeploymentPolicy,
    queue: EventQueue,
    arrivals: Vec<SimRng>,
    policy_rng: SimRng,
    observer: Observer,
    ledger: MetricsLedger,
    next_task: u64,
    trace: TraceHash,
    dispatched: u64,
    commands: u64,
}

impl Engine<'_> {
    fn schedule(&mut self, at: f64, kind: EventKind) {
        self.queue
            .schedule(at, kind)
            .expect("engine only schedules at or after the clock");
    }

    fn gap(&mut self, user: UserId, first: bool) -> f64 {
        let mean = self.world.users[user.index()].profile.mean_interarrival;
        let rng = &mut self.arrivals[user.index()];
        match (self.config.deterministic_arrivals, first) {
            (false, _) => sample_interarrival(rng, mean),
            // random phase so fixed-rate users do not fire in lockstep
            (true, true) => mean * rng.gen::<f64>(),
            (true, false) => mean,
        }
    }

    fn start_user(&mut self, user: UserId) {
        debug_assert_eq!(self.arrivals.len(), user.index());
        self.arrivals
            .push(substream(self.config.rng_seed, Stream::UserArrivals, user.0 as u64));
        let at = self.world.users[user.index()].active_from.max(self.queue.clock()) + self.gap(user, true);
        if at < self.config.duration {
            self.schedule(at, EventKind::TaskArrival { user });
        }
    }

    fn on_arrival(&mut self, user: UserId) {
        let now = self.queue.clock();
        let task = Task::new(TaskId(self.next_task), &self.world.users[user.index()], now);
        self.next_task += 1;
        self.ledger.record_created(task.town, now);
        self.observer.record(task.town.index(), task.cpu_demand);
        match offloading::offload(task, &mut self.world) {
            Offload::Enqueued {
                resource,
                task,
                delivered_at,
                in_service,
            } => {
                if in_service {
                    self.schedule(delivered_at, EventKind::TaskCompletion { resource, task });
                }
            }
            Offload::NoResource(task) => self.ledger.record_outcome(&task),
        }
        let next = now + self.gap(user, false);
        if next < self.config.duration {
            self.schedule(next, EventKind::TaskArrival { user });
        }
    }

    fn on_completion(&mut self, resource: ResourceRef, task: TaskId) {
        let now = self.queue.clock();
        if let Some(done) = offloading::complete(&mut self.world, resource, task, now) {
            self.ledger.record_outcome(&done.task);
            if let Some((task, at)) = done.next {
                self.schedule(at, EventKind::TaskCompletion { resource, task });
            }
        }
    }

    fn on_uav_arrival(&mut self, uav: UavId) {
        let now = self.queue.clock();
        let u = &mut self.world.uavs[uav.index()];
        if let FlightState::Flying { destination, arrival_at } = u.flight_state {
            if arrival_at == now {
                u.position = destination;
                u.flight_state = FlightState::Stationed;
            }
        }
    }

    fn relocate(&mut self, cmd: RelocationCommand) {
        let now = self.queue.clock();
        let u = &mut self.world.uavs[cmd.uav.index()];
        if !u.flight_state.is_stationed() {
            return;
        }
        let arrival_at = now + horizontal_distance(u.position, cmd.destination) / u.speed;
        u.flight_state = FlightState::Flying {
            destination: cmd.destination,
            arrival_at,
        };
        self.commands += 1;
        self.schedule(arrival_at, EventKind::UavArrival { uav: cmd.uav });
    }

    fn on_tick(&mut self) {
        let counts = self.observer.rotate();
        let snapshot = hap_snapshot(&self.world, &counts);
        let commands = self.policy.plan(&snapshot, &mut self.policy_rng);
        for cmd in commands {
            self.relocate(cmd);
        }
        let next = self.queue.clock() + self.config.policy_tick_period;
        if next <= self.config.duration {
            self.schedule(next, EventKind::PolicyTick);
        }
    }

    fn on_scenario_event(&mut self, index: usize) {
        let event = self.world.timeline[index].clone();
        let effect = apply_event(&mut self.world, &event).expect("scenario validated before the run");
        for task in &effect.failed {
            self.ledger.record_outcome(task);
        }
        for user in effect.spawned {
            self.start_user(user);
        }
    }

    /// Classifies tasks still queued at the end of the run.
    fn flush(&mut self) {
        let end = self.config.duration;
        let queues = self
            .world
            .edges
            .iter()
            .map(|e| &e.queue)
            .chain(self.world.uavs.iter().map(|u| &u.queue));
        for queue in queues {
            for q in queue.iter() {
                let mut task = q.task.clone();
                if end - task.created_at > task.worst_case_delay {
                    task.outcome = TaskOutcome::FailedDeadline;
                }
                self.ledger.record_outcome(&task);
            }
        }
    }

    fn dispatch(&mut self, ev: Event) {
        self.world.clock = ev.at;
        self.trace.event(&ev);
        self.dispatched += 1;
        match ev.kind {
            EventKind::TaskArrival { user } => self.on_arrival(user),
            EventKind::TaskCompletion { resource, task } => self.on_completion(resource, task),
            EventKind::UavArrival { uav } => self.on_uav_arrival(uav),
            EventKind::PolicyTick => self.on_tick(),
            EventKind::ScenarioEvent { event } => self.on_scenario_event(event),
            EventKind::MetricsFlush => self.flush(),
        }
    }
}

/// Runs `world` under `policy` until `config.duration`.
pub fn run(mut world: WorldState, config: &SimConfig, policy: &DeploymentPolicy) -> RunOutput {
    world.clock = 0.0;
    world.wlan_round_trip = config.wlan_round_trip;
    let names = world.towns.iter().map(|t| t.name.clone()).collect();
    let window = policy
        .observation_window()
        .unwrap_or(config.policy_tick_period);
    let mut engine = Engine {
        observer: Observer::new(world.towns.len(), window, config.policy_tick_period),
        ledger: MetricsLedger::new(names, config.duration, config.metrics_bucket, config.record_outcomes),
        arrivals: Vec::with_capacity(world.users.len()),
        policy_rng: substream(config.rng_seed, Stream::Policy, 0),
        queue: EventQueue::new(),
        world,
        config,
        policy,
        next_task: 0,
        trace: TraceHash::new(),
        dispatched: 0,
        commands: 0,
    };

    for (i, ev) in engine.world.timeline.iter().enumerate() {
        engine
            .queue
            .schedule(ev.at, EventKind::ScenarioEvent { event: i })
            .expect("event times are non-negative");
    }
    for i in 0..engine.world.users.len() {
        engine.start_user(UserId(i as u32));
    }
    if config.policy_tick_period <= config.duration {
        engine.schedule(config.policy_tick_period, EventKind::PolicyTick);
    }

    while let Some(ev) = engine.queue.pop_until(config.duration) {
        engine.dispatch(ev);
    }
    engine.schedule(config.duration, EventKind::MetricsFlush);
    let flush = engine.queue.pop_until(config.duration).expect("flush is due");
    engine.dispatch(flush);

    RunOutput {
        ledger: engine.ledger,
        trace_hash: engine.trace.0,
        events_dispatched: engine.dispatched,
        commands_issued: engine.commands,
        world: engine.world,
    }
}
