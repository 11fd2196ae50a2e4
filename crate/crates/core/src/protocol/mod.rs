//! Mutual-exclusion protocols expressed as replicated data types.
//!
//! Both protocols share the same four operations. Each returns a delta; the
//! caller merges it locally and propagates it.

use std::fmt::Debug;
use std::hash::Hash;

use crate::canonical::Canonical;
use crate::dots::Uid;
use crate::error::Result;
use crate::lattice::Lattice;

mod token;
mod voting;

pub use token::{select_from, Ownership, Token};
pub use voting::{majority_threshold, Membership, Vote, Voting};

/// Borrowed view of the concrete protocol behind a lock, for invariant checks.
#[derive(Clone, Copy, Debug)]
pub enum LockView<'a> {
    Token(&'a Token),
    Voting(&'a Voting),
}

/// Protocol-level facts carried by a delta, recorded by the simulator to check
/// safety over a whole execution rather than one snapshot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LockFact {
    /// An ownership statement `(epoch, owner)` was produced.
    Ownership { epoch: u64, owner: Uid },
    /// `voter` cast a vote for `candidate` in round `epoch`.
    Vote {
        epoch: u64,
        candidate: Uid,
        voter: Uid,
    },
}

/// The common interface of the lock protocols.
pub trait MutexProtocol:
    Lattice + Canonical + Eq + Hash + Ord + Send + Sync + 'static
{
    /// Static configuration shared by all replicas of one instance.
    type Config: Clone + Debug + Send + Sync;

    /// Short protocol name used in traces.
    const NAME: &'static str;

    /// Whether a pending request must be re-issued until it succeeds.
    const RETRY_REQUEST: bool;

    fn is_owner(&self, config: &Self::Config, me: &Uid) -> bool;
    fn request(&self, config: &Self::Config, me: &Uid) -> Result<Self>;
    fn release(&self, config: &Self::Config, me: &Uid) -> Result<Self>;
    fn upkeep(&self, config: &Self::Config, me: &Uid) -> Result<Self>;

    /// Current ownership epoch (token epoch or voting round).
    fn epoch(&self) -> u64;

    /// Delta that establishes `owner` as the holder of a fresh instance, for
    /// protocols that start with an owner.
    fn initial(config: &Self::Config, owner: &Uid) -> Option<Self>;

    fn view(&self) -> LockView<'_>;

    /// Voting membership, for protocols that have one.
    fn membership(_config: &Self::Config) -> Option<&Membership> {
        None
    }

    /// Facts introduced by `self` when it is a delta produced by an operation.
    fn facts(&self) -> Vec<LockFact>;
}
