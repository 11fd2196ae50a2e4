//! Worked examples of the lock protocols through the public API.

use std::collections::BTreeSet;

use ardt_locks::dots::{DotSet, Uid};
use ardt_locks::excl::{EpochLog, Excl};
use ardt_locks::lattice::{Epoch, Lattice};
use ardt_locks::protocol::{select_from, Membership, MutexProtocol, Ownership, Token, Vote, Voting};

fn uid(s: &str) -> Uid {
    Uid::new(s).unwrap()
}

fn wants(ids: &[&str]) -> DotSet<Uid> {
    ids.iter()
        .fold(DotSet::new(), |acc, id| acc.merge(&acc.add_elem(uid(id), &uid(id))))
}

fn group(ids: &[&str]) -> Membership {
    Membership::new(ids.iter().map(|id| uid(id)))
}

fn voting(ballots: &[(&str, &str)]) -> Voting {
    let mut v = Voting::bottom();
    for (owner, voter) in ballots {
        let value = v.rounds.value.add_elem(Vote::new(uid(owner), uid(voter)), &uid(voter));
        v = v.merge(&Voting {
            rounds: Epoch {
                counter: v.round(),
                value,
            },
        });
    }
    v
}

#[test]
fn upkeep_hands_over_at_the_next_epoch() {
    let s = Token {
        os: Ownership::new(3, uid("A")),
        wants: wants(&["B", "C"]),
    };
    let delta = s.upkeep(&uid("A"));
    assert_eq!(delta.os, Ownership::new(4, uid("C")));
    assert!(delta.wants.is_bottom());
    let after = s.merge(&delta);
    assert!(!after.is_owner(&uid("A")));
    assert!(after.is_owner(&uid("C")));
}

#[test]
fn owner_that_is_the_largest_requester_keeps_the_token() {
    let s = Token {
        os: Ownership::new(0, uid("A")),
        wants: wants(&["A"]),
    };
    assert!(s.upkeep(&uid("A")).is_bottom());
    assert_eq!(select_from(&wants(&["A", "B"]), &uid("B")), None);
    assert_eq!(select_from(&wants(&["A", "B"]), &uid("A")), Some(uid("B")));
}

#[test]
fn newer_ownership_ends_the_old_owner() {
    let s = Token::with_owner(0, uid("A"));
    assert!(s.is_owner(&uid("A")));
    let s = s.merge(&Token::with_owner(1, uid("B")));
    assert!(!s.is_owner(&uid("A")));
}

#[test]
fn equal_epochs_merge_their_votes() {
    let a = voting(&[("A", "A")]);
    let b = voting(&[("B", "B")]);
    let merged = a.merge(&b);
    assert_eq!(merged.round(), 0);
    assert_eq!(
        merged.votes(),
        BTreeSet::from([Vote::new(uid("A"), uid("A")), Vote::new(uid("B"), uid("B"))])
    );
}

#[test]
fn request_votes_for_self_only_in_an_empty_round() {
    let m = group(&["A", "B", "C"]);
    let delta = MutexProtocol::request(&Voting::bottom(), &m, &uid("A")).unwrap();
    assert_eq!(delta.votes(), BTreeSet::from([Vote::new(uid("A"), uid("A"))]));
    let s = voting(&[("B", "B")]);
    assert!(MutexProtocol::request(&s, &m, &uid("A")).unwrap().is_bottom());
}

#[test]
fn upkeep_follows_the_leader_once() {
    let m = group(&["A", "B", "C"]);
    let s = voting(&[("A", "A")]);
    let delta = MutexProtocol::upkeep(&s, &m, &uid("B")).unwrap();
    assert_eq!(delta.votes(), BTreeSet::from([Vote::new(uid("A"), uid("B"))]));
    let s = s.merge(&delta);
    assert!(s.is_owner(&m, &uid("A")));
    assert!(MutexProtocol::upkeep(&s, &m, &uid("B")).unwrap().is_bottom());
}

#[test]
fn split_vote_moves_to_the_next_round() {
    let m = group(&["A", "B", "C"]);
    let s = voting(&[("A", "A"), ("B", "B"), ("C", "C")]);
    assert!(s.majority_impossible(&m));
    let delta = MutexProtocol::upkeep(&s, &m, &uid("A")).unwrap();
    assert_eq!(delta.round(), 1);
    assert!(delta.votes().is_empty());
    assert!(!voting(&[("A", "A")]).majority_impossible(&m));
    assert!(!Voting::bottom().majority_impossible(&m));
}

#[test]
fn release_by_owner_opens_a_new_round() {
    let m = group(&["A", "B", "C"]);
    let mut s = voting(&[("A", "A"), ("A", "B")]);
    s.rounds.counter = 4;
    assert!(s.is_owner(&m, &uid("A")));
    let delta = MutexProtocol::release(&s, &m, &uid("A")).unwrap();
    assert_eq!(delta.round(), 5);
    assert!(delta.votes().is_empty());
    let after = s.merge(&delta);
    assert!(m.iter().all(|id| !after.is_owner(&m, id)));
    assert!(MutexProtocol::release(&s, &m, &uid("B")).unwrap().is_bottom());
}

#[test]
fn ties_go_to_the_larger_id() {
    assert_eq!(voting(&[("A", "A"), ("B", "B")]).leading_candidate(), Some(uid("B")));
    assert_eq!(
        voting(&[("A", "A"), ("A", "B"), ("C", "C")]).leading_candidate(),
        Some(uid("A"))
    );
    assert_eq!(Voting::bottom().leading_candidate(), None);
}

#[test]
fn majority_of_four_needs_three() {
    let s = voting(&[("A", "A"), ("A", "B")]);
    assert!(s.is_owner(&group(&["A", "B", "C"]), &uid("A")));
    assert!(!s.is_owner(&group(&["A", "B", "C", "D"]), &uid("A")));
}

#[test]
fn stale_deltas_are_discarded() {
    let s = Token {
        os: Ownership::new(2, uid("B")),
        wants: wants(&["A"]),
    };
    let mut t = s.clone();
    assert!(!t.merge_in(&Token::with_owner(1, uid("C"))));
    assert!(!t.merge_in(&Token::bottom()));
    assert_eq!(t, s);
}

#[test]
fn only_the_owner_transforms() {
    let s: Excl<Token, EpochLog> = Excl::new(Token::with_owner(0, uid("A")), EpochLog::default());
    let write = |log: &EpochLog| {
        assert!(log.entries.is_empty());
        EpochLog::entry(0, uid("A"))
    };
    let delta = s.transform(&(), &uid("A"), write);
    assert!(delta.lock.is_bottom());
    assert_eq!(delta.value, EpochLog::entry(0, uid("A")));
    assert!(s.transform(&(), &uid("B"), |_| EpochLog::entry(0, uid("B"))).is_bottom());
}
