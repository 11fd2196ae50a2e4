use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::dots::Uid;
use crate::excl::LogEntry;
use crate::protocol::{LockFact, MutexProtocol};

use super::subject::{ConfigOf, Subject};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReplicaState<S> {
    pub id: Uid,
    pub state: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Payload {
    /// A delta produced by an operation.
    Delta,
    /// A full state sent by anti-entropy.
    FullState,
}

/// A message in transit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Envelope<S> {
    pub from: Uid,
    pub to: Uid,
    pub kind: Payload,
    pub body: S,
}

/// Everything any operation has ever produced, used for whole-execution checks
/// that a single snapshot cannot see (dropped deltas, overwritten rounds).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    pub lock_facts: BTreeSet<(String, LockFact)>,
    pub log_entries: BTreeSet<(String, LogEntry)>,
}

impl History {
    /// Records the facts carried by a freshly produced delta.
    pub fn record<S: Subject>(&mut self, config: &ConfigOf<S>, delta: &S) {
        for key in S::keys(config) {
            for fact in delta.lock(&key).facts() {
                self.lock_facts.insert((key.clone(), fact));
            }
        }
        for (key, log) in delta.logs() {
            for e in &log.entries {
                self.log_entries.insert((key.clone(), e.clone()));
            }
        }
    }
}

/// All replica states plus the messages in flight.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState<S> {
    pub replicas: Vec<ReplicaState<S>>,
    pub in_flight: Vec<Envelope<S>>,
    pub history: History,
}

impl<S: Subject> GlobalState<S> {
    pub fn new(ids: &[Uid]) -> Self {
        GlobalState {
            replicas: ids
                .iter()
                .map(|id| ReplicaState {
                    id: id.clone(),
                    state: S::bottom(),
                })
                .collect(),
            in_flight: Vec::new(),
            history: History::default(),
        }
    }

    pub fn index_of(&self, id: &Uid) -> Option<usize> {
        self.replicas.iter().position(|r| r.id == *id)
    }

    /// Join of every replica state.
    pub fn join(&self) -> S {
        self.replicas
            .iter()
            .fold(S::bottom(), |acc, r| acc.merge(&r.state))
    }

    /// Replicas that currently believe they own `key`.
    pub fn owners(&self, config: &ConfigOf<S>, key: &str) -> Vec<Uid> {
        self.replicas
            .iter()
            .filter(|r| r.state.is_owner(config, key, &r.id))
            .map(|r| r.id.clone())
            .collect()
    }

    /// Largest lock epoch per replica for `key`.
    pub fn epochs(&self, key: &str) -> Vec<u64> {
        self.replicas
            .iter()
            .map(|r| r.state.lock(key).epoch())
            .collect()
    }

    /// Sorts the message multiset so equal worlds compare equal regardless of
    /// send order.
    pub fn canonicalize(&mut self) {
        self.in_flight.sort();
    }

    pub fn dump(&self) -> Value {
        let replicas: serde_json::Map<String, Value> = self
            .replicas
            .iter()
            .map(|r| (r.id.to_string(), r.state.canonical()))
            .collect();
        let in_flight: Vec<Value> = self
            .in_flight
            .iter()
            .map(|e| {
                json!({
                    "from": e.from.as_str(),
                    "to": e.to.as_str(),
                    "full": e.kind == Payload::FullState,
                    "body": e.body.canonical(),
                })
            })
            .collect();
        json!({ "replicas": replicas, "in_flight": in_flight })
    }
}
