//! Bounded breadth-first enumeration of every reachable global state.
//!
//! At each state any participant may invoke any operation and any in-flight
//! message may be delivered or dropped. Message queues are treated as
//! multisets. Upkeep and application writes are explicit choices rather than
//! being triggered automatically, which explores a superset of the
//! simulator's schedules.
//!
//! Two reductions keep the search small without losing behaviours:
//!
//! * a message that is already covered by its recipient's state can never
//!   change anything, so it is discarded as if the network had dropped it;
//! * a global state reached again with no less budget remaining than an
//!   earlier visit is not expanded again.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexSet;

use crate::dots::Uid;
use crate::protocol::MutexProtocol;

use super::check::{check_snapshot, Violation, ViolationKind};
use super::subject::{ConfigOf, Subject};
use super::world::{Envelope, GlobalState, Payload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreBounds {
    /// Requests plus releases each replica may issue. Every replica
    /// alternates between the two, starting with a request, so two
    /// request/release cycles take four operations.
    pub ops_per_replica: u32,
    /// Messages that can be in flight at once; further sends are lost.
    pub max_in_flight: usize,
    /// Total deliveries along any path.
    pub max_deliveries: u32,
    /// Operations that would move a lock past this epoch are not explored.
    pub max_epoch: Option<u64>,
    /// Abort once this many distinct states have been seen.
    pub max_states: usize,
}

impl Default for ExploreBounds {
    fn default() -> Self {
        ExploreBounds {
            ops_per_replica: 4,
            max_in_flight: 6,
            max_deliveries: 6,
            max_epoch: None,
            max_states: 500_000,
        }
    }
}

/// Which properties the explorer evaluates in each state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Checks {
    /// Everything [`check_snapshot`] covers.
    #[default]
    All,
    /// Only that no two replicas own a lock at once.
    SingleOwner,
}

#[derive(Clone, Debug)]
pub enum ExploreOutcome {
    /// Every reachable state passed the checks.
    Verified,
    /// A shortest path from the initial state to a violating state.
    Counterexample {
        violation: Violation,
        path: Vec<String>,
    },
    /// The state budget ran out before the search finished.
    BudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct ExploreReport {
    /// Distinct global states reached.
    pub states: usize,
    /// Search nodes expanded: global states paired with remaining budget.
    pub nodes: usize,
    pub transitions: usize,
    pub max_depth: usize,
    pub outcome: ExploreOutcome,
}

impl ExploreReport {
    pub fn verified(&self) -> bool {
        matches!(self.outcome, ExploreOutcome::Verified)
    }
}

impl fmt::Display for ExploreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "states: {}\nnodes: {}\ntransitions: {}\nmax_depth: {}",
            self.states, self.nodes, self.transitions, self.max_depth
        )?;
        match &self.outcome {
            ExploreOutcome::Verified => write!(f, "result: verified"),
            ExploreOutcome::BudgetExhausted => write!(f, "result: budget exhausted"),
            ExploreOutcome::Counterexample { violation, path } => {
                writeln!(f, "result: violation: {violation}")?;
                writeln!(f, "path:")?;
                for (i, step) in path.iter().enumerate() {
                    writeln!(f, "  {}. {step}", i + 1)?;
                }
                write!(f, "world: {}", violation.world)
            }
        }
    }
}

#[derive(Clone)]
struct Node<S> {
    world: GlobalState<S>,
    ops: Vec<u32>,
    deliveries: u32,
}

struct Budget {
    world: usize,
    ops: Vec<u32>,
    deliveries: u32,
}

impl Budget {
    /// True if `self` has used no more of any budget than `other`.
    fn dominates<S>(&self, other: &Node<S>) -> bool {
        self.deliveries <= other.deliveries && self.ops.iter().zip(&other.ops).all(|(a, b)| a <= b)
    }
}

#[derive(Clone, Copy)]
enum Op {
    Request,
    Release,
    Upkeep,
    Work,
}

struct Explorer<'a, S: Subject, C> {
    config: &'a ConfigOf<S>,
    checker: C,
    keys: Vec<String>,
    participants: Vec<usize>,
    bounds: ExploreBounds,
}

impl<S, C> Explorer<'_, S, C>
where
    S: Subject,
    C: Fn(&GlobalState<S>, &ConfigOf<S>) -> Result<(), Violation>,
{
    fn within_epoch_bound(&self, state: &S) -> bool {
        match self.bounds.max_epoch {
            None => true,
            Some(max) => self.keys.iter().all(|k| state.lock(k).epoch() <= max),
        }
    }

    /// Applies a locally produced delta at replica `i` and broadcasts it.
    /// Returns `None` when the delta is empty or leaves the epoch bound.
    fn produce(&self, node: &Node<S>, i: usize, delta: S) -> Option<Node<S>> {
        if delta.is_bottom() {
            return None;
        }
        let merged = node.world.replicas[i].state.merge(&delta);
        if !self.within_epoch_bound(&merged) {
            return None;
        }
        let mut next = node.clone();
        next.world.history.record(self.config, &delta);
        next.world.replicas[i].state = merged;
        let from = next.world.replicas[i].id.clone();
        for j in 0..next.world.replicas.len() {
            if j != i && next.world.in_flight.len() < self.bounds.max_in_flight {
                let to = next.world.replicas[j].id.clone();
                next.world.in_flight.push(Envelope {
                    from: from.clone(),
                    to,
                    kind: Payload::Delta,
                    body: delta.clone(),
                });
            }
        }
        Some(self.settle(next))
    }

    fn settle(&self, mut node: Node<S>) -> Node<S> {
        let world = &mut node.world;
        let replicas = &world.replicas;
        world.in_flight.retain(|env| {
            let to = replicas.iter().find(|r| r.id == env.to).expect("known recipient");
            !env.body.leq(&to.state)
        });
        world.canonicalize();
        node
    }

    fn operation(&self, node: &Node<S>, i: usize, key: &str, op: Op) -> Option<Node<S>> {
        let r = &node.world.replicas[i];
        let delta = match op {
            Op::Request => r.state.request(self.config, key, &r.id),
            Op::Release => r.state.release(self.config, key, &r.id),
            Op::Upkeep => r.state.upkeep(self.config, key, &r.id),
            Op::Work => Ok(r.state.work(self.config, key, &r.id)),
        }
        .ok()?;
        let mut next = self.produce(node, i, delta)?;
        if matches!(op, Op::Request | Op::Release) {
            next.ops[i] += 1;
        }
        Some(next)
    }

    fn successors(&self, node: &Node<S>) -> Vec<(String, Node<S>)> {
        let mut out = Vec::new();
        for &i in &self.participants {
            let id = &node.world.replicas[i].id;
            for key in &self.keys {
                let mut ops = vec![(Op::Upkeep, "upkeep"), (Op::Work, "transform")];
                if node.ops[i] < self.bounds.ops_per_replica {
                    ops.push(if node.ops[i] % 2 == 0 {
                        (Op::Request, "request")
                    } else {
                        (Op::Release, "release")
                    });
                }
                for (op, name) in ops {
                    if let Some(next) = self.operation(node, i, key, op) {
                        out.push((format!("{id} {name} {key}"), next));
                    }
                }
            }
        }
        let queue = &node.world.in_flight;
        for idx in 0..queue.len() {
            if idx > 0 && queue[idx] == queue[idx - 1] {
                continue;
            }
            let env = &queue[idx];
            let label = format!("{}->{}", env.from, env.to);

            let mut dropped = node.clone();
            dropped.world.in_flight.remove(idx);
            out.push((format!("drop {label}"), self.settle(dropped)));

            if node.deliveries >= self.bounds.max_deliveries {
                continue;
            }
            let j = node.world.index_of(&env.to).expect("known recipient");
            let merged = node.world.replicas[j].state.merge(&env.body);
            if !self.within_epoch_bound(&merged) {
                continue;
            }
            let mut delivered = node.clone();
            delivered.world.in_flight.remove(idx);
            delivered.world.replicas[j].state = merged;
            delivered.deliveries += 1;
            out.push((format!("deliver {label}"), self.settle(delivered)));
        }
        out
    }

    fn check(&self, parent: &Node<S>, node: &Node<S>) -> Result<(), Violation> {
        for key in &self.keys {
            let before = parent.world.epochs(key);
            let after = node.world.epochs(key);
            if let Some(i) = (0..after.len()).find(|&i| after[i] < before[i]) {
                return Err(Violation {
                    kind: ViolationKind::EpochRegression {
                        key: key.clone(),
                        replica: node.world.replicas[i].id.clone(),
                        from: before[i],
                        to: after[i],
                    },
                    world: node.world.dump(),
                });
            }
        }
        (self.checker)(&node.world, self.config)
    }
}

/// Explores every state reachable from the initial configuration within
/// `bounds`, checking each one with [`check_snapshot`].
pub fn explore<S: Subject>(
    ids: &[Uid],
    initial_owner: &Uid,
    config: &ConfigOf<S>,
    bounds: ExploreBounds,
) -> ExploreReport {
    explore_with(ids, initial_owner, config, bounds, check_snapshot::<S>)
}

/// Like [`explore`] but with a custom state check. Epoch monotonicity is
/// always checked.
pub fn explore_with<S, C>(
    ids: &[Uid],
    initial_owner: &Uid,
    config: &ConfigOf<S>,
    bounds: ExploreBounds,
    checker: C,
) -> ExploreReport
where
    S: Subject,
    C: Fn(&GlobalState<S>, &ConfigOf<S>) -> Result<(), Violation>,
{
    let participants = match S::Lock::membership(&config.lock) {
        Some(m) => (0..ids.len()).filter(|&i| m.contains(&ids[i])).collect(),
        None => (0..ids.len()).collect(),
    };
    let explorer = Explorer {
        config,
        checker,
        keys: S::keys(config),
        participants,
        bounds,
    };
    let mut root = Node {
        world: GlobalState::<S>::new(ids),
        ops: vec![0; ids.len()],
        deliveries: 0,
    };
    if let Some(init) = S::initial(config, initial_owner) {
        let i = root.world.index_of(initial_owner).expect("owner is a replica");
        root = explorer.produce(&root, i, init).unwrap_or(root);
    }

    let root = explorer.settle(root);

    // Global states in discovery order. A search node is a global state
    // plus the budget used to reach it; `visits` lists the nodes of each
    // state.
    let mut worlds: IndexSet<GlobalState<S>> = IndexSet::new();
    let mut visits: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut nodes: Vec<Budget> = Vec::new();
    // (parent node, action label, depth)
    let mut parents: Vec<(usize, String, usize)> = Vec::new();
    let mut transitions = 0usize;
    let mut max_depth = 0usize;

    let report = |worlds: &IndexSet<GlobalState<S>>, nodes: usize, transitions, max_depth, outcome| {
        ExploreReport {
            states: worlds.len(),
            nodes,
            transitions,
            max_depth,
            outcome,
        }
    };

    if let Err(violation) = (explorer.checker)(&root.world, config) {
        worlds.insert(root.world);
        let outcome = ExploreOutcome::Counterexample {
            violation,
            path: Vec::new(),
        };
        return report(&worlds, 1, 0, 0, outcome);
    }
    let (w, _) = worlds.insert_full(root.world);
    visits.insert(w, vec![0]);
    nodes.push(Budget {
        world: w,
        ops: root.ops,
        deliveries: root.deliveries,
    });
    parents.push((usize::MAX, String::new(), 0));

    let mut cursor = 0;
    while cursor < nodes.len() {
        let budget = &nodes[cursor];
        let node = Node {
            world: worlds[budget.world].clone(),
            ops: budget.ops.clone(),
            deliveries: budget.deliveries,
        };
        let depth = parents[cursor].2;
        for (label, next) in explorer.successors(&node) {
            transitions += 1;
            let known = worlds.get_index_of(&next.world);
            if let Some(w) = known {
                if visits[&w].iter().any(|&n| nodes[n].dominates(&next)) {
                    continue;
                }
            } else if worlds.len() >= bounds.max_states {
                return report(&worlds, nodes.len(), transitions, max_depth, ExploreOutcome::BudgetExhausted);
            }
            let verdict = explorer.check(&node, &next);
            let Node { world, ops, deliveries } = next;
            let w = match known {
                Some(w) => w,
                None => worlds.insert_full(world).0,
            };
            let idx = nodes.len();
            visits.entry(w).or_default().push(idx);
            nodes.push(Budget { world: w, ops, deliveries });
            parents.push((cursor, label, depth + 1));
            max_depth = max_depth.max(depth + 1);
            if let Err(violation) = verdict {
                let mut path = Vec::new();
                let mut at = idx;
                while parents[at].0 != usize::MAX {
                    path.push(parents[at].1.clone());
                    at = parents[at].0;
                }
                path.reverse();
                let outcome = ExploreOutcome::Counterexample { violation, path };
                return report(&worlds, nodes.len(), transitions, max_depth, outcome);
            }
        }
        cursor += 1;
    }
    report(&worlds, nodes.len(), transitions, max_depth, ExploreOutcome::Verified)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mutants::NoEpochBumpToken;
    use crate::protocol::{Membership, Token, Voting};
    use crate::sim::check::check_single_owner;
    use crate::sim::subject::SubjectConfig;

    fn ids(n: usize) -> Vec<Uid> {
        (1..=n).map(|i| Uid::new(format!("r{i}")).unwrap()).collect()
    }

    fn small() -> ExploreBounds {
        ExploreBounds {
            ops_per_replica: 2,
            max_in_flight: 4,
            max_deliveries: 4,
            max_epoch: None,
            max_states: 100_000,
        }
    }

    #[test]
    fn token_small_instance_is_safe() {
        let ids = ids(2);
        let report = explore::<Token>(&ids, &ids[0], &SubjectConfig::single(()), small());
        assert!(report.verified(), "{report}");
        assert!(report.states > 100);
    }

    #[test]
    fn voting_small_instance_is_safe() {
        let ids = ids(3);
        let cfg = SubjectConfig::single(Membership::new(ids.clone()));
        let bounds = ExploreBounds {
            max_epoch: Some(1),
            ..small()
        };
        let report = explore::<Voting>(&ids, &ids[0], &cfg, bounds);
        assert!(report.verified(), "{report}");
    }

    #[test]
    fn broken_upkeep_yields_a_two_owner_path() {
        let ids = ids(2);
        let report = explore_with::<NoEpochBumpToken, _>(
            &ids,
            &ids[1],
            &SubjectConfig::single(()),
            small(),
            check_single_owner::<NoEpochBumpToken>,
        );
        let ExploreOutcome::Counterexample { violation, path } = report.outcome else {
            panic!("expected a counterexample");
        };
        assert!(matches!(violation.kind, ViolationKind::MultipleOwners { .. }));
        assert_eq!(path.len(), 4);
        assert_eq!(path[0], "r1 request lock");
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let ids = ids(2);
        let bounds = ExploreBounds {
            max_states: 10,
            ..small()
        };
        let report = explore::<Token>(&ids, &ids[0], &SubjectConfig::single(()), bounds);
        assert!(matches!(report.outcome, ExploreOutcome::BudgetExhausted));
        assert_eq!(report.states, 10);
    }
}
