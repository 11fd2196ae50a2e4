use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::canonical::Canonical;
use crate::derive_product_lattice;
use crate::dots::{DotSet, Uid};
use crate::error::{Error, Result};
use crate::lattice::{Epoch, Lattice};

use super::{LockFact, LockView, MutexProtocol};

/// `voter` supports `owner` in the current round.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vote {
    pub owner: Uid,
    pub voter: Uid,
}

impl Vote {
    pub fn new(owner: Uid, voter: Uid) -> Self {
        Vote { owner, voter }
    }
}

impl Canonical for Vote {
    fn canonical(&self) -> Value {
        Value::String(format!("{}/{}", self.owner, self.voter))
    }
}

/// The fixed set of voting participants. Configuration, never merged.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Membership {
    members: BTreeSet<Uid>,
}

impl Membership {
    pub fn new(members: impl IntoIterator<Item = Uid>) -> Self {
        Membership {
            members: members.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: &Uid) -> bool {
        self.members.contains(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Uid> {
        self.members.iter()
    }

    pub fn threshold(&self) -> usize {
        majority_threshold(self.len())
    }

    fn check(&self, me: &Uid) -> Result<()> {
        if self.contains(me) {
            Ok(())
        } else {
            Err(Error::NotMember(me.clone()))
        }
    }
}

/// Votes needed for a majority of `n` participants: `floor(n/2) + 1`.
pub fn majority_threshold(n: usize) -> usize {
    n / 2 + 1
}

/// Majority-voting mutual exclusion over numbered rounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Voting {
    pub rounds: Epoch<DotSet<Vote>>,
}

derive_product_lattice!(Voting { rounds });

impl Voting {
    pub fn round(&self) -> u64 {
        self.rounds.counter
    }

    /// Votes observed in the current round.
    pub fn votes(&self) -> BTreeSet<Vote> {
        self.rounds.value.elements()
    }

    /// Distinct voters per candidate in the current round.
    pub fn tally(&self) -> BTreeMap<Uid, BTreeSet<Uid>> {
        let mut tally: BTreeMap<Uid, BTreeSet<Uid>> = BTreeMap::new();
        for v in self.votes() {
            tally.entry(v.owner).or_default().insert(v.voter);
        }
        tally
    }

    pub fn vote_count(&self, candidate: &Uid) -> usize {
        self.tally().get(candidate).map_or(0, BTreeSet::len)
    }

    pub fn has_voted(&self, voter: &Uid) -> bool {
        self.votes().iter().any(|v| v.voter == *voter)
    }

    /// Candidate with the most votes; ties go to the larger id.
    pub fn leading_candidate(&self) -> Option<Uid> {
        self.tally()
            .into_iter()
            .max_by(|(a, av), (b, bv)| av.len().cmp(&bv.len()).then_with(|| a.cmp(b)))
            .map(|(c, _)| c)
    }

    /// True when no candidate can reach a majority this round, counting every
    /// member without an observed vote as still available to anyone.
    pub fn majority_impossible(&self, members: &Membership) -> bool {
        let voters: BTreeSet<Uid> = self.votes().into_iter().map(|v| v.voter).collect();
        let free = members.iter().filter(|m| !voters.contains(*m)).count();
        let best = self.tally().values().map(BTreeSet::len).max().unwrap_or(0);
        best + free < members.threshold()
    }

    pub fn is_owner(&self, members: &Membership, me: &Uid) -> bool {
        self.leading_candidate().as_ref() == Some(me)
            && self.vote_count(me) >= members.threshold()
    }

    fn vote_delta(&self, candidate: Uid, voter: &Uid) -> Voting {
        Voting {
            rounds: Epoch::new(
                self.round(),
                self.rounds.value.add_elem(Vote::new(candidate, voter.clone()), voter),
            ),
        }
    }

    fn next_round(&self) -> Voting {
        Voting {
            rounds: Epoch::new(self.round() + 1, DotSet::bottom()),
        }
    }

    /// Votes for `me` when no vote has been observed this round.
    pub fn request(&self, members: &Membership, me: &Uid) -> Result<Voting> {
        members.check(me)?;
        if self.rounds.value.is_empty() {
            Ok(self.vote_delta(me.clone(), me))
        } else {
            Ok(Voting::bottom())
        }
    }

    /// Starts the next round if called by the current owner.
    pub fn release(&self, members: &Membership, me: &Uid) -> Result<Voting> {
        if self.is_owner(members, me) {
            Ok(self.next_round())
        } else {
            Ok(Voting::bottom())
        }
    }

    /// Advances a deadlocked round, otherwise backs the leading candidate once.
    pub fn upkeep(&self, members: &Membership, me: &Uid) -> Result<Voting> {
        members.check(me)?;
        if self.majority_impossible(members) {
            return Ok(self.next_round());
        }
        if self.has_voted(me) {
            return Ok(Voting::bottom());
        }
        Ok(match self.leading_candidate() {
            Some(leader) => self.vote_delta(leader, me),
            None => Voting::bottom(),
        })
    }
}

impl MutexProtocol for Voting {
    type Config = Membership;

    const NAME: &'static str = "voting";
    const RETRY_REQUEST: bool = true;

    fn is_owner(&self, members: &Membership, me: &Uid) -> bool {
        Voting::is_owner(self, members, me)
    }

    fn request(&self, members: &Membership, me: &Uid) -> Result<Self> {
        Voting::request(self, members, me)
    }

    fn release(&self, members: &Membership, me: &Uid) -> Result<Self> {
        Voting::release(self, members, me)
    }

    fn upkeep(&self, members: &Membership, me: &Uid) -> Result<Self> {
        Voting::upkeep(self, members, me)
    }

    fn epoch(&self) -> u64 {
        self.round()
    }

    fn initial(_: &Membership, _: &Uid) -> Option<Self> {
        None
    }

    fn view(&self) -> LockView<'_> {
        LockView::Voting(self)
    }

    fn membership(config: &Membership) -> Option<&Membership> {
        Some(config)
    }

    fn facts(&self) -> Vec<LockFact> {
        self.rounds
            .value
            .store()
            .values()
            .map(|v| LockFact::Vote {
                epoch: self.round(),
                candidate: v.owner.clone(),
                voter: v.voter.clone(),
            })
            .collect()
    }
}

impl Canonical for Voting {
    fn canonical(&self) -> Value {
        json!({ "counter": self.rounds.counter, "votes": self.rounds.value.canonical() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uid(s: &str) -> Uid {
        Uid::new(s).unwrap()
    }

    fn members(ids: &[&str]) -> Membership {
        Membership::new(ids.iter().map(|s| uid(s)))
    }

    /// Round `counter` with the given (candidate, voter) votes.
    fn with_votes(counter: u64, votes: &[(&str, &str)]) -> Voting {
        let mut s = Voting {
            rounds: Epoch::new(counter, DotSet::new()),
        };
        for (c, v) in votes {
            let d = s.vote_delta(uid(c), &uid(v));
            s = s.merge(&d);
        }
        s
    }

    #[test]
    fn threshold() {
        assert_eq!(majority_threshold(3), 2);
        assert_eq!(majority_threshold(4), 3);
        assert_eq!(majority_threshold(5), 3);
    }

    #[test]
    fn is_owner_examples() {
        let m3 = members(&["A", "B", "C"]);
        let m4 = members(&["A", "B", "C", "D"]);
        let s = with_votes(0, &[("A", "A"), ("A", "B")]);
        assert!(s.is_owner(&m3, &uid("A")));
        assert!(!s.is_owner(&m4, &uid("A")));
        assert!(!s.is_owner(&m3, &uid("B")));
        assert!(!with_votes(0, &[("A", "A")]).is_owner(&m3, &uid("A")));
    }

    #[test]
    fn request_self_votes_only_on_empty_round() {
        let m = members(&["A", "B", "C"]);
        let s = Voting::bottom();
        let d = s.request(&m, &uid("A")).unwrap();
        assert_eq!(d.votes(), BTreeSet::from([Vote::new(uid("A"), uid("A"))]));
        let s = s.merge(&d);
        assert!(s.request(&m, &uid("B")).unwrap().is_bottom());
        assert!(matches!(
            s.request(&m, &uid("Z")),
            Err(Error::NotMember(_))
        ));
    }

    #[test]
    fn concurrent_requests_both_land_in_the_round() {
        let m = members(&["A", "B", "C"]);
        let s = Voting::bottom();
        let merged = s
            .merge(&s.request(&m, &uid("A")).unwrap())
            .merge(&s.request(&m, &uid("B")).unwrap());
        assert_eq!(merged.round(), 0);
        assert_eq!(merged.votes().len(), 2);
    }

    #[test]
    fn upkeep_votes_for_leader() {
        let m = members(&["A", "B", "C"]);
        let s = with_votes(0, &[("A", "A")]);
        let d = s.upkeep(&m, &uid("B")).unwrap();
        assert_eq!(d.votes(), BTreeSet::from([Vote::new(uid("A"), uid("B"))]));
        assert!(s.upkeep(&m, &uid("A")).unwrap().is_bottom());
        assert!(Voting::bottom().upkeep(&m, &uid("A")).unwrap().is_bottom());
    }

    #[test]
    fn upkeep_advances_split_round() {
        let m = members(&["A", "B", "C"]);
        let s = with_votes(7, &[("A", "A"), ("B", "B"), ("C", "C")]);
        assert!(s.majority_impossible(&m));
        let d = s.upkeep(&m, &uid("A")).unwrap();
        assert_eq!(d.round(), 8);
        assert!(d.votes().is_empty());
        assert_eq!(s.merge(&d).round(), 8);
    }

    #[test]
    fn majority_impossible_arithmetic() {
        let m = members(&["A", "B", "C"]);
        assert!(!with_votes(0, &[("A", "A")]).majority_impossible(&m));
        assert!(!Voting::bottom().majority_impossible(&m));
        let m4 = members(&["A", "B", "C", "D"]);
        assert!(with_votes(0, &[("A", "A"), ("A", "B"), ("C", "C"), ("C", "D")])
            .majority_impossible(&m4));
        assert!(!with_votes(0, &[("A", "A"), ("A", "B"), ("C", "C")]).majority_impossible(&m4));
    }

    #[test]
    fn leading_candidate_examples() {
        assert_eq!(
            with_votes(0, &[("A", "A"), ("A", "B"), ("C", "C")]).leading_candidate(),
            Some(uid("A"))
        );
        assert_eq!(
            with_votes(0, &[("A", "A"), ("B", "B")]).leading_candidate(),
            Some(uid("B"))
        );
        assert_eq!(Voting::bottom().leading_candidate(), None);
    }

    #[test]
    fn release_starts_next_round_for_owner_only() {
        let m = members(&["A", "B", "C"]);
        let s = with_votes(4, &[("A", "A"), ("A", "B")]);
        let d = s.release(&m, &uid("A")).unwrap();
        assert_eq!(d, Voting { rounds: Epoch::new(5, DotSet::bottom()) });
        assert!(s.release(&m, &uid("B")).unwrap().is_bottom());
        let after = s.merge(&d);
        for id in ["A", "B", "C"] {
            assert!(!after.is_owner(&m, &uid(id)));
        }
    }

    #[test]
    fn facts_list_cast_votes() {
        let s = with_votes(2, &[("A", "A")]);
        assert_eq!(
            s.facts(),
            vec![LockFact::Vote {
                epoch: 2,
                candidate: uid("A"),
                voter: uid("A")
            }]
        );
    }
}
