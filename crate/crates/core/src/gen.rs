//! Random lattice states over small universes, for law checks and property
//! tests.
//!
//! Every generator draws from three replicas and a handful of dot counters so
//! that independent draws overlap often. A dot always carries the same
//! element, as it would in a real execution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dots::{Dot, DotContext, DotSet, Uid};
use crate::error::Error;
use crate::excl::{EpochLog, Excl, LogEntry};
use crate::lattice::{Epoch, Lattice};
use crate::laws::{check_laws_sampled, LawReport};
use crate::protocol::{Ownership, Token, Vote, Voting};

pub const REPLICAS: [&str; 3] = ["a", "b", "c"];
const MAX_COUNTER: u64 = 5;
const MAX_EPOCH: u64 = 3;

pub fn uid(rng: &mut impl Rng) -> Uid {
    replica(rng.gen_range(0..REPLICAS.len()))
}

fn replica(i: usize) -> Uid {
    Uid::new(REPLICAS[i % REPLICAS.len()]).expect("valid id")
}

fn replica_index(id: &Uid) -> usize {
    REPLICAS.iter().position(|r| *r == id.as_str()).unwrap_or(0)
}

/// A causal context with a random prefix and a few gaps per replica.
pub fn context(rng: &mut impl Rng) -> DotContext {
    let mut dots = Vec::new();
    for i in 0..REPLICAS.len() {
        for c in 1..=MAX_COUNTER {
            if rng.gen_bool(0.4) {
                dots.push(Dot::new(replica(i), c));
            }
        }
    }
    dots.into_iter().collect()
}

/// A dot set whose store is a random part of a random context, with elements
/// assigned by `elem`.
pub fn dot_set_with<E, R, F>(rng: &mut R, mut elem: F) -> DotSet<E>
where
    E: Ord + Clone,
    R: Rng,
    F: FnMut(&Dot) -> E,
{
    let context = context(rng);
    let store: BTreeMap<Dot, E> = context
        .iter()
        .filter(|_| rng.gen_bool(0.5))
        .map(|d| {
            let e = elem(&d);
            (d, e)
        })
        .collect();
    DotSet::from_parts(store, context).expect("store drawn from context")
}

/// Element carried by a dot in generated `DotSet<Uid>` values.
pub fn uid_of(dot: &Dot) -> Uid {
    replica(replica_index(&dot.replica) + dot.counter as usize)
}

pub fn dot_set(rng: &mut impl Rng) -> DotSet<Uid> {
    dot_set_with(rng, uid_of)
}

pub fn ownership(rng: &mut impl Rng) -> Ownership {
    if rng.gen_bool(0.1) {
        return Lattice::bottom();
    }
    Ownership::new(rng.gen_range(0..=MAX_EPOCH), uid(rng))
}

pub fn token(rng: &mut impl Rng) -> Token {
    Token {
        os: ownership(rng),
        wants: dot_set_with(rng, |d| d.replica.clone()),
    }
}

pub fn epoch(rng: &mut impl Rng) -> Epoch<DotSet<Uid>> {
    Epoch {
        counter: rng.gen_range(0..=MAX_EPOCH),
        value: dot_set(rng),
    }
}

/// Ballot carried by a dot in generated voting states: the voter is the
/// dot's replica.
pub fn vote_of(dot: &Dot) -> Vote {
    Vote::new(uid_of(dot), dot.replica.clone())
}

pub fn voting(rng: &mut impl Rng) -> Voting {
    Voting {
        rounds: Epoch {
            counter: rng.gen_range(0..=MAX_EPOCH),
            value: dot_set_with(rng, vote_of),
        },
    }
}

pub fn epoch_log(rng: &mut impl Rng) -> EpochLog {
    let mut log = EpochLog::default();
    for _ in 0..rng.gen_range(0..4) {
        log.entries.insert(LogEntry {
            epoch: rng.gen_range(0..=MAX_EPOCH),
            writer: uid(rng),
        });
    }
    log
}

pub fn excl(rng: &mut impl Rng) -> Excl<Token, EpochLog> {
    Excl {
        lock: token(rng),
        value: epoch_log(rng),
    }
}

/// The lattice types with a generator, as named on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeType {
    Ownership,
    Token,
    Epoch,
    DotSet,
    Voting,
    Excl,
}

impl LatticeType {
    pub const ALL: [LatticeType; 6] = [
        LatticeType::Ownership,
        LatticeType::Token,
        LatticeType::Epoch,
        LatticeType::DotSet,
        LatticeType::Voting,
        LatticeType::Excl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeType::Ownership => "ownership",
            LatticeType::Token => "token",
            LatticeType::Epoch => "epoch",
            LatticeType::DotSet => "dotset",
            LatticeType::Voting => "voting",
            LatticeType::Excl => "excl",
        }
    }

    /// Checks the lattice laws on `samples` random singles, pairs and
    /// triples. On failure returns the violated law with its witnesses.
    pub fn check(self, samples: usize, seed: u64) -> Result<LawReport, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rng = &mut rng;
        let describe = |e: &dyn fmt::Display| e.to_string();
        match self {
            LatticeType::Ownership => check_laws_sampled(rng, ownership, samples).map_err(|e| describe(&e)),
            LatticeType::Token => check_laws_sampled(rng, token, samples).map_err(|e| describe(&e)),
            LatticeType::Epoch => check_laws_sampled(rng, epoch, samples).map_err(|e| describe(&e)),
            LatticeType::DotSet => check_laws_sampled(rng, dot_set, samples).map_err(|e| describe(&e)),
            LatticeType::Voting => check_laws_sampled(rng, voting, samples).map_err(|e| describe(&e)),
            LatticeType::Excl => check_laws_sampled(rng, excl, samples).map_err(|e| describe(&e)),
        }
    }
}

impl fmt::Display for LatticeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        LatticeType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Scenario(format!("unknown lattice type {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_dot_sets_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = dot_set(&mut rng);
            for (d, e) in s.store() {
                assert!(s.context().contains(d));
                assert_eq!(*e, uid_of(d));
            }
        }
    }

    #[test]
    fn generators_cover_bottom_and_non_bottom() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let owners: Vec<Ownership> = (0..200).map(|_| ownership(&mut rng)).collect();
        assert!(owners.iter().any(Lattice::is_bottom));
        assert!(owners.iter().any(|o| !o.is_bottom()));
    }

    #[test]
    fn every_type_passes_a_short_check() {
        for t in LatticeType::ALL {
            assert!(t.check(200, 3).is_ok(), "{t}");
        }
    }

    #[test]
    fn names_round_trip() {
        for t in LatticeType::ALL {
            assert_eq!(t.name().parse::<LatticeType>().unwrap(), t);
        }
        assert!("nope".parse::<LatticeType>().is_err());
    }
}
