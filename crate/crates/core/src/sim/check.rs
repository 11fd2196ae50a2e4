//! Safety checks over a global snapshot and the execution history behind it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::Value;

use crate::dots::Uid;
use crate::protocol::{LockFact, LockView, MutexProtocol};

use super::subject::{ConfigOf, Subject};
use super::world::GlobalState;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// More than one replica believes it owns the lock.
    MultipleOwners { key: String, owners: Vec<Uid> },
    /// Two ownership statements share an epoch.
    EpochOwnerConflict { key: String, epoch: u64, owners: Vec<Uid> },
    /// A voter backed two candidates in one round.
    DoubleVote { key: String, epoch: u64, voter: Uid },
    /// Two candidates reached a majority in one round.
    MultipleMajorities { key: String, epoch: u64, candidates: Vec<Uid> },
    /// A replica considers a majority impossible although one exists.
    UnsoundImpossibility { key: String, epoch: u64, replica: Uid, winner: Uid },
    /// A replica's lock epoch went backwards.
    EpochRegression { key: String, replica: Uid, from: u64, to: u64 },
    /// Two writers logged entries under one ownership epoch.
    LogConflict { key: String, epoch: u64 },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::MultipleOwners { key, owners } => {
                write!(f, "{key}: replicas {owners:?} all believe they own the lock")
            }
            ViolationKind::EpochOwnerConflict { key, epoch, owners } => {
                write!(f, "{key}: epoch {epoch} was assigned to {owners:?}")
            }
            ViolationKind::DoubleVote { key, epoch, voter } => {
                write!(f, "{key}: {voter} voted twice in round {epoch}")
            }
            ViolationKind::MultipleMajorities { key, epoch, candidates } => {
                write!(f, "{key}: round {epoch} has majorities for {candidates:?}")
            }
            ViolationKind::UnsoundImpossibility { key, epoch, replica, winner } => write!(
                f,
                "{key}: {replica} deems round {epoch} undecidable but {winner} holds a majority"
            ),
            ViolationKind::EpochRegression { key, replica, from, to } => {
                write!(f, "{key}: epoch at {replica} went from {from} to {to}")
            }
            ViolationKind::LogConflict { key, epoch } => {
                write!(f, "{key}: log has several writers for epoch {epoch}")
            }
        }
    }
}

/// A failed check together with the world it was found in.
#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub world: Value,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

impl std::error::Error for Violation {}

/// Runs every applicable check and returns the first violation.
pub fn check_snapshot<S: Subject>(
    world: &GlobalState<S>,
    config: &ConfigOf<S>,
) -> Result<(), Violation> {
    find_violation(world, config).map_or(Ok(()), |kind| {
        Err(Violation {
            kind,
            world: world.dump(),
        })
    })
}

/// Only the headline property: at most one replica believes it owns each
/// lock.
pub fn check_single_owner<S: Subject>(
    world: &GlobalState<S>,
    config: &ConfigOf<S>,
) -> Result<(), Violation> {
    multiple_owners(world, config).map_or(Ok(()), |kind| {
        Err(Violation {
            kind,
            world: world.dump(),
        })
    })
}

fn multiple_owners<S: Subject>(
    world: &GlobalState<S>,
    config: &ConfigOf<S>,
) -> Option<ViolationKind> {
    S::keys(config).into_iter().find_map(|key| {
        let owners = world.owners(config, &key);
        (owners.len() > 1).then_some(ViolationKind::MultipleOwners { key, owners })
    })
}

fn find_violation<S: Subject>(
    world: &GlobalState<S>,
    config: &ConfigOf<S>,
) -> Option<ViolationKind> {
    let keys = S::keys(config);
    if let Some(v) = multiple_owners(world, config) {
        return Some(v);
    }
    if let Some(v) = check_ownership_history(world) {
        return Some(v);
    }
    if let Some(members) = S::Lock::membership(&config.lock) {
        let threshold = members.threshold();
        let rounds = vote_history(world);
        for ((key, epoch), ballots) in &rounds {
            let mut support: BTreeMap<&Uid, usize> = BTreeMap::new();
            for (voter, candidates) in ballots {
                if candidates.len() > 1 {
                    return Some(ViolationKind::DoubleVote {
                        key: key.clone(),
                        epoch: *epoch,
                        voter: (*voter).clone(),
                    });
                }
                for c in candidates {
                    *support.entry(c).or_default() += 1;
                }
            }
            let winners: Vec<Uid> = support
                .into_iter()
                .filter(|&(_, n)| n >= threshold)
                .map(|(c, _)| c.clone())
                .collect();
            if winners.len() > 1 {
                return Some(ViolationKind::MultipleMajorities {
                    key: key.clone(),
                    epoch: *epoch,
                    candidates: winners,
                });
            }
        }
        for r in &world.replicas {
            for key in &keys {
                let lock = r.state.lock(key);
                let LockView::Voting(v) = lock.view() else {
                    continue;
                };
                if !v.majority_impossible(members) {
                    continue;
                }
                if let Some(winner) = majority_winner(&rounds, key, v.round(), threshold) {
                    return Some(ViolationKind::UnsoundImpossibility {
                        key: key.clone(),
                        epoch: v.round(),
                        replica: r.id.clone(),
                        winner,
                    });
                }
            }
        }
    }
    check_logs(world)
}

fn check_ownership_history<S: Subject>(world: &GlobalState<S>) -> Option<ViolationKind> {
    let mut by_epoch: BTreeMap<(&String, u64), BTreeSet<&Uid>> = BTreeMap::new();
    for (key, fact) in &world.history.lock_facts {
        if let LockFact::Ownership { epoch, owner } = fact {
            by_epoch.entry((key, *epoch)).or_default().insert(owner);
        }
    }
    by_epoch
        .into_iter()
        .find(|(_, owners)| owners.len() > 1)
        .map(|((key, epoch), owners)| ViolationKind::EpochOwnerConflict {
            key: key.clone(),
            epoch,
            owners: owners.into_iter().cloned().collect(),
        })
}

type Ballots<'a> = BTreeMap<(String, u64), BTreeMap<&'a Uid, BTreeSet<&'a Uid>>>;

/// Every vote ever cast, grouped by round and voter.
fn vote_history<S: Subject>(world: &GlobalState<S>) -> Ballots<'_> {
    let mut rounds: Ballots<'_> = BTreeMap::new();
    for (key, fact) in &world.history.lock_facts {
        if let LockFact::Vote {
            epoch,
            candidate,
            voter,
        } = fact
        {
            rounds
                .entry((key.clone(), *epoch))
                .or_default()
                .entry(voter)
                .or_default()
                .insert(candidate);
        }
    }
    rounds
}

fn majority_winner(rounds: &Ballots<'_>, key: &str, epoch: u64, threshold: usize) -> Option<Uid> {
    let ballots = rounds.get(&(key.to_owned(), epoch))?;
    let mut support: BTreeMap<&Uid, usize> = BTreeMap::new();
    for candidates in ballots.values() {
        for c in candidates {
            *support.entry(c).or_default() += 1;
        }
    }
    support
        .into_iter()
        .find(|&(_, n)| n >= threshold)
        .map(|(c, _)| c.clone())
}

fn check_logs<S: Subject>(world: &GlobalState<S>) -> Option<ViolationKind> {
    let mut writers: BTreeMap<(&String, u64), BTreeSet<&Uid>> = BTreeMap::new();
    for (key, entry) in &world.history.log_entries {
        writers.entry((key, entry.epoch)).or_default().insert(&entry.writer);
    }
    if let Some(((key, epoch), _)) = writers.iter().find(|(_, w)| w.len() > 1) {
        return Some(ViolationKind::LogConflict {
            key: (*key).clone(),
            epoch: *epoch,
        });
    }
    for r in &world.replicas {
        for (key, log) in r.state.logs() {
            if let Some(&epoch) = log.conflicting_epochs().first() {
                return Some(ViolationKind::LogConflict { key, epoch });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Membership, Token, Voting};
    use crate::sim::subject::{SubjectConfig, MAIN_LOCK};
    use crate::lattice::Lattice;

    fn uid(s: &str) -> Uid {
        Uid::new(s).unwrap()
    }

    fn ids(n: &[&str]) -> Vec<Uid> {
        n.iter().map(|s| uid(s)).collect()
    }

    #[test]
    fn single_initial_owner_passes() {
        let cfg = SubjectConfig::single(());
        let mut w = GlobalState::<Token>::new(&ids(&["A", "B", "C"]));
        let init = Token::with_owner(0, uid("A"));
        for r in &mut w.replicas {
            r.state = init.clone();
        }
        w.history.record(&cfg, &init);
        assert!(check_snapshot(&w, &cfg).is_ok());
    }

    #[test]
    fn two_owners_in_different_epochs_are_reported() {
        let cfg = SubjectConfig::single(());
        let mut w = GlobalState::<Token>::new(&ids(&["A", "B"]));
        w.replicas[0].state = Token::with_owner(3, uid("A"));
        w.replicas[1].state = Token::with_owner(4, uid("B"));
        let err = check_snapshot(&w, &cfg).unwrap_err();
        assert_eq!(
            err.kind,
            ViolationKind::MultipleOwners {
                key: MAIN_LOCK.into(),
                owners: ids(&["A", "B"])
            }
        );
        assert!(err.world["replicas"]["A"].is_object());
    }

    #[test]
    fn reused_epoch_is_reported_from_history() {
        let cfg = SubjectConfig::single(());
        let mut w = GlobalState::<Token>::new(&ids(&["A", "B"]));
        w.history.record(&cfg, &Token::with_owner(1, uid("A")));
        w.history.record(&cfg, &Token::with_owner(1, uid("B")));
        assert!(matches!(
            check_snapshot(&w, &cfg).unwrap_err().kind,
            ViolationKind::EpochOwnerConflict { epoch: 1, .. }
        ));
    }

    fn voting_world() -> (SubjectConfig<Membership>, GlobalState<Voting>) {
        let members = Membership::new(ids(&["A", "B", "C"]));
        (
            SubjectConfig::single(members),
            GlobalState::new(&ids(&["A", "B", "C"])),
        )
    }

    #[test]
    fn double_vote_is_reported() {
        let (cfg, mut w) = voting_world();
        let s = Voting::bottom();
        w.history.record(&cfg, &s.request(&cfg.lock, &uid("A")).unwrap());
        w.history.record(&cfg, &s.request(&cfg.lock, &uid("B")).unwrap());
        assert!(check_snapshot(&w, &cfg).is_ok());
        let a_votes = s.merge(&s.request(&cfg.lock, &uid("A")).unwrap());
        w.history.record(&cfg, &a_votes.upkeep(&cfg.lock, &uid("B")).unwrap());
        assert!(matches!(
            check_snapshot(&w, &cfg).unwrap_err().kind,
            ViolationKind::DoubleVote { .. }
        ));
    }

    #[test]
    fn unsound_impossibility_is_reported() {
        let (cfg, mut w) = voting_world();
        // Globally A has {A, B}; replica C only sees three split votes that
        // never happened together.
        for fact in [("A", "A"), ("A", "B")] {
            w.history.lock_facts.insert((
                MAIN_LOCK.into(),
                LockFact::Vote {
                    epoch: 0,
                    candidate: uid(fact.0),
                    voter: uid(fact.1),
                },
            ));
        }
        let mut fake = Voting::bottom();
        for (c, v) in [("A", "A"), ("B", "B"), ("C", "C")] {
            let d = Voting {
                rounds: crate::lattice::Epoch::new(
                    0,
                    fake.rounds
                        .value
                        .add_elem(crate::protocol::Vote::new(uid(c), uid(v)), &uid(v)),
                ),
            };
            fake = fake.merge(&d);
        }
        w.replicas[2].state = fake;
        assert!(matches!(
            check_snapshot(&w, &cfg).unwrap_err().kind,
            ViolationKind::UnsoundImpossibility { .. }
        ));
    }
}
