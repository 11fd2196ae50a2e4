//! Seeded discrete-event simulation of replicas exchanging deltas.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dots::Uid;
use crate::error::Result;
use crate::protocol::MutexProtocol;

use super::check::{check_snapshot, Violation, ViolationKind};
use super::scenario::{Op, Scenario, Workload};
use super::subject::{ConfigOf, Subject};
use super::trace::{EventKind, Trace};
use super::world::{Envelope, GlobalState, Payload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Action {
    Request,
    Release,
    Upkeep,
    Work,
}

impl Action {
    fn name(self) -> &'static str {
        match self {
            Action::Request => "request",
            Action::Release => "release",
            Action::Upkeep => "upkeep",
            Action::Work => "transform",
        }
    }
}

/// Per replica and lock workload bookkeeping.
#[derive(Clone, Debug, Default)]
struct LockStatus {
    wanting: bool,
    requests: u32,
    owner: bool,
    acquisitions: u64,
    acquired_after_request: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MessageStats {
    pub sent: u64,
    pub delivered: u64,
    pub stale: u64,
    pub dropped: u64,
    pub duplicated: u64,
}

/// Outcome of one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub protocol: String,
    pub seed: u64,
    pub steps: u64,
    /// Times each replica went from not owning to owning a lock.
    pub acquisitions: BTreeMap<String, u64>,
    /// Total ownership acquisitions after the initial assignment.
    pub owner_changes: u64,
    /// Replicas that issued at least one request.
    pub requesters: Vec<String>,
    /// Requesters that never acquired the lock after their first request.
    pub unsatisfied: Vec<String>,
    pub messages: MessageStats,
    /// All replicas equal after the final full exchange.
    pub converged: bool,
    pub violation: Option<String>,
}

impl RunSummary {
    pub fn ok(&self) -> bool {
        self.violation.is_none() && self.converged
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub violation: Option<Violation>,
    pub trace: Trace,
}

/// A running simulation over subject type `S`.
pub struct Simulation<S: Subject> {
    scenario: Scenario,
    config: ConfigOf<S>,
    keys: Vec<String>,
    world: GlobalState<S>,
    participant: Vec<bool>,
    status: Vec<Vec<LockStatus>>,
    rng: ChaCha8Rng,
    step: u64,
    trace: Trace,
    stats: MessageStats,
    violation: Option<Violation>,
}

impl<S: Subject> Simulation<S> {
    pub fn new(scenario: &Scenario, config: ConfigOf<S>, trace: bool) -> Result<Self> {
        scenario.validate()?;
        let ids = scenario.replica_ids()?;
        let keys = S::keys(&config);
        let participant = match S::Lock::membership(&config.lock) {
            Some(m) => ids.iter().map(|id| m.contains(id)).collect(),
            None => vec![true; ids.len()],
        };
        let mut sim = Simulation {
            scenario: scenario.clone(),
            world: GlobalState::new(&ids),
            status: vec![vec![LockStatus::default(); keys.len()]; ids.len()],
            participant,
            keys,
            config,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            step: 0,
            trace: Trace::new(trace),
            stats: MessageStats::default(),
            violation: None,
        };
        let owner = scenario.initial_owner_id(&ids)?;
        if let Some(init) = S::initial(&sim.config, &owner) {
            let i = sim.world.index_of(&owner).expect("owner is a replica");
            sim.produce(i, "init", init);
        }
        sim.refresh_ownership();
        for st in sim.status.iter_mut().flatten() {
            st.acquisitions = 0;
        }
        sim.check();
        Ok(sim)
    }

    pub fn world(&self) -> &GlobalState<S> {
        &self.world
    }

    pub fn config(&self) -> &ConfigOf<S> {
        &self.config
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn violation(&self) -> Option<&Violation> {
        self.violation.as_ref()
    }

    pub fn finished(&self) -> bool {
        self.violation.is_some() || self.step >= self.scenario.steps
    }

    fn id(&self, i: usize) -> &Uid {
        &self.world.replicas[i].id
    }

    /// Merges a locally produced delta and broadcasts it. Deltas that do not
    /// grow the local state are discarded.
    fn produce(&mut self, i: usize, op: &str, delta: S) {
        let step = self.step;
        let me = self.world.replicas[i].id.to_string();
        let useful = !delta.is_bottom();
        self.trace.emit(step, EventKind::OpInvoked, &me, || {
            json!({
                "op": op,
                "delta": if useful { delta.canonical() } else { Value::Null },
            })
        });
        if !useful {
            return;
        }
        self.world.history.record(&self.config, &delta);
        self.world.replicas[i].state.merge_in(&delta);
        self.broadcast(i, Payload::Delta, &delta);
    }

    fn broadcast(&mut self, i: usize, kind: Payload, body: &S) {
        let from = self.id(i).clone();
        for j in 0..self.world.replicas.len() {
            if j == i {
                continue;
            }
            let to = self.id(j).clone();
            self.stats.sent += 1;
            self.trace.emit(self.step, EventKind::DeltaSent, from.as_str(), || {
                json!({
                    "to": to.as_str(),
                    "full": kind == Payload::FullState,
                    "body": body.canonical(),
                })
            });
            // A newer full state from the same sender supersedes a queued one.
            if kind == Payload::FullState {
                if let Some(e) = self
                    .world
                    .in_flight
                    .iter_mut()
                    .find(|e| e.kind == kind && e.from == from && e.to == to)
                {
                    e.body = body.clone();
                    continue;
                }
            }
            self.world.in_flight.push(Envelope {
                from: from.clone(),
                to,
                kind,
                body: body.clone(),
            });
        }
    }

    fn invoke(&mut self, i: usize, k: usize, action: Action) {
        let me = self.id(i).clone();
        let key = self.keys[k].clone();
        let state = &self.world.replicas[i].state;
        let delta = match action {
            Action::Request => state.request(&self.config, &key, &me),
            Action::Release => state.release(&self.config, &key, &me),
            Action::Upkeep => state.upkeep(&self.config, &key, &me),
            Action::Work => Ok(state.work(&self.config, &key, &me)),
        };
        // Only participants act, so membership errors cannot occur here.
        let delta = delta.expect("participant operations succeed");
        self.produce(i, action.name(), delta);
    }

    fn upkeep_all(&mut self, i: usize) {
        for k in 0..self.keys.len() {
            self.invoke(i, k, Action::Upkeep);
        }
    }

    fn request(&mut self, i: usize, k: usize) {
        let st = &mut self.status[i][k];
        st.wanting = true;
        st.requests += 1;
        // A request by the current owner is satisfied on the spot.
        if st.owner {
            st.acquired_after_request = true;
        }
        self.invoke(i, k, Action::Request);
    }

    fn release(&mut self, i: usize, k: usize) {
        self.status[i][k].wanting = false;
        self.invoke(i, k, Action::Release);
        self.upkeep_all(i);
    }

    /// One workload activation of replica `i`.
    fn activate(&mut self, i: usize) {
        let Workload::Random {
            request,
            release,
            max_requests,
        } = self.scenario.workload
        else {
            return;
        };
        let k = self.rng.gen_range(0..self.keys.len());
        let me = self.id(i).clone();
        let owner = self.world.replicas[i]
            .state
            .is_owner(&self.config, &self.keys[k], &me);
        let st = &self.status[i][k];
        if owner {
            self.invoke(i, k, Action::Work);
            if self.rng.gen_bool(release) {
                self.release(i, k);
            }
        } else if st.wanting {
            if S::Lock::RETRY_REQUEST {
                self.invoke(i, k, Action::Request);
            }
        } else if (max_requests == 0 || st.requests < max_requests) && self.rng.gen_bool(request) {
            self.request(i, k);
        }
    }

    fn run_schedule(&mut self) {
        let Workload::Schedule { entries } = &self.scenario.workload else {
            return;
        };
        let due: Vec<_> = entries
            .iter()
            .filter(|e| e.step == self.step)
            .cloned()
            .collect();
        for e in due {
            let i = self
                .world
                .replicas
                .iter()
                .position(|r| r.id.as_str() == e.replica)
                .expect("validated replica");
            if !self.participant[i] {
                continue;
            }
            let k = e
                .resource
                .as_ref()
                .and_then(|r| self.keys.iter().position(|key| key == r))
                .unwrap_or(0);
            match e.op {
                Op::Request => self.request(i, k),
                Op::Release => {
                    let me = self.id(i).clone();
                    if self.world.replicas[i]
                        .state
                        .is_owner(&self.config, &self.keys[k], &me)
                    {
                        self.invoke(i, k, Action::Work);
                    }
                    self.release(i, k);
                }
            }
        }
    }

    fn anti_entropy(&mut self) {
        for i in 0..self.world.replicas.len() {
            let state = self.world.replicas[i].state.clone();
            self.broadcast(i, Payload::FullState, &state);
        }
    }

    fn deliver_one(&mut self) {
        let m = self.world.in_flight.len();
        let idx = if self.scenario.network.reorder {
            self.rng.gen_range(0..m)
        } else {
            0
        };
        let step = self.step;
        let env = &self.world.in_flight[idx];
        let partitioned = self
            .scenario
            .network
            .partitions
            .iter()
            .any(|p| p.active(step) && p.separates(&env.from, &env.to));
        let lost = partitioned || self.rng.gen_bool(self.scenario.network.drop);
        if lost {
            let env = self.world.in_flight.remove(idx);
            self.stats.dropped += 1;
            self.trace.emit(step, EventKind::DeltaDropped, env.to.as_str(), || {
                json!({ "from": env.from.as_str(), "partitioned": partitioned })
            });
            return;
        }
        let env = if self.rng.gen_bool(self.scenario.network.duplicate) {
            self.stats.duplicated += 1;
            self.world.in_flight[idx].clone()
        } else {
            self.world.in_flight.remove(idx)
        };
        self.receive(env);
    }

    fn receive(&mut self, env: Envelope<S>) {
        let j = self.world.index_of(&env.to).expect("known recipient");
        let stale = env.body.leq(&self.world.replicas[j].state);
        self.stats.delivered += 1;
        if stale {
            self.stats.stale += 1;
        }
        self.trace.emit(self.step, EventKind::DeltaDelivered, env.to.as_str(), || {
            json!({ "from": env.from.as_str(), "stale": stale })
        });
        if stale {
            return;
        }
        self.world.replicas[j].state.merge_in(&env.body);
        if self.participant[j] {
            self.upkeep_all(j);
        }
    }

    fn refresh_ownership(&mut self) {
        for i in 0..self.world.replicas.len() {
            for k in 0..self.keys.len() {
                let me = &self.world.replicas[i].id;
                let now = self.world.replicas[i]
                    .state
                    .is_owner(&self.config, &self.keys[k], me);
                let st = &mut self.status[i][k];
                if now && !st.owner {
                    st.acquisitions += 1;
                    if st.requests > 0 {
                        st.acquired_after_request = true;
                    }
                }
                st.owner = now;
            }
        }
    }

    fn check(&mut self) {
        if self.violation.is_some() {
            return;
        }
        if let Err(v) = check_snapshot(&self.world, &self.config) {
            self.violation = Some(v);
        }
    }

    fn snapshot(&mut self, phase: &str) {
        let step = self.step;
        let world = &self.world;
        self.trace
            .emit(step, EventKind::Snapshot, "", || json!({ "phase": phase, "world": world.dump() }));
    }

    /// Executes one step: periodic exchanges, scheduled operations, then one
    /// network event or workload activation.
    pub fn step(&mut self) {
        if self.finished() {
            return;
        }
        self.step += 1;
        let before: Vec<Vec<u64>> = self.keys.iter().map(|k| self.world.epochs(k)).collect();

        let net = &self.scenario.network;
        if net.anti_entropy > 0 && self.step % net.anti_entropy == 0 {
            self.anti_entropy();
        }
        let every = self.scenario.upkeep_every;
        if every > 0 && self.step % every == 0 {
            for i in 0..self.world.replicas.len() {
                if self.participant[i] {
                    self.upkeep_all(i);
                }
            }
        }
        self.run_schedule();

        let actors: Vec<usize> = match self.scenario.workload {
            Workload::Random { .. } => (0..self.participant.len())
                .filter(|&i| self.participant[i])
                .collect(),
            Workload::Schedule { .. } => Vec::new(),
        };
        let m = self.world.in_flight.len();
        if m + actors.len() > 0 {
            let pick = self.rng.gen_range(0..m + actors.len());
            if pick < m {
                self.deliver_one();
            } else {
                self.activate(actors[pick - m]);
            }
        }

        self.refresh_ownership();
        for (k, key) in self.keys.iter().enumerate() {
            let after = self.world.epochs(key);
            if let Some(i) = (0..after.len()).find(|&i| after[i] < before[k][i]) {
                self.violation.get_or_insert_with(|| Violation {
                    kind: ViolationKind::EpochRegression {
                        key: key.clone(),
                        replica: self.world.replicas[i].id.clone(),
                        from: before[k][i],
                        to: after[i],
                    },
                    world: self.world.dump(),
                });
            }
        }
        self.check();
        let every = self.scenario.snapshot_every;
        if every > 0 && self.step % every == 0 {
            self.snapshot("periodic");
        }
    }

    /// Runs to completion, then reliably exchanges all states and checks that
    /// the replicas converged. Each replica merges the others' states in its
    /// own random order.
    pub fn run(self) -> RunOutcome {
        self.finish().0
    }

    /// Like [`Simulation::run`], also returning the converged world.
    pub fn finish(mut self) -> (RunOutcome, GlobalState<S>) {
        while !self.finished() {
            self.step();
        }
        let states: Vec<S> = self.world.replicas.iter().map(|r| r.state.clone()).collect();
        for i in 0..states.len() {
            let mut order: Vec<usize> = (0..states.len()).filter(|&j| j != i).collect();
            order.shuffle(&mut self.rng);
            for j in order {
                self.world.replicas[i].state.merge_in(&states[j]);
            }
        }
        let converged = self
            .world
            .replicas
            .windows(2)
            .all(|w| w[0].state == w[1].state);
        self.check();
        self.snapshot("final");

        let mut acquisitions = BTreeMap::new();
        let mut requesters = Vec::new();
        let mut unsatisfied = Vec::new();
        for (i, r) in self.world.replicas.iter().enumerate() {
            let st = &self.status[i];
            acquisitions.insert(r.id.to_string(), st.iter().map(|s| s.acquisitions).sum());
            if st.iter().any(|s| s.requests > 0) {
                requesters.push(r.id.to_string());
                if st.iter().any(|s| s.requests > 0 && !s.acquired_after_request) {
                    unsatisfied.push(r.id.to_string());
                }
            }
        }
        let summary = RunSummary {
            protocol: self.scenario.protocol.name().to_owned(),
            seed: self.scenario.seed,
            steps: self.step,
            owner_changes: acquisitions.values().sum(),
            acquisitions,
            requesters,
            unsatisfied,
            messages: self.stats.clone(),
            converged,
            violation: self.violation.as_ref().map(|v| v.to_string()),
        };
        let outcome = RunOutcome {
            summary,
            violation: self.violation,
            trace: self.trace,
        };
        (outcome, self.world)
    }
}
