//! Deliberately broken protocol variants, used to show that the checker and
//! the explorer detect real safety bugs.

use serde_json::Value;

use crate::canonical::Canonical;
use crate::dots::Uid;
use crate::error::Result;
use crate::lattice::Lattice;
use crate::protocol::{select_from, LockFact, LockView, MutexProtocol, Ownership, Token};

/// Token whose upkeep hands over ownership without bumping the epoch.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoEpochBumpToken(pub Token);

impl Lattice for NoEpochBumpToken {
    fn bottom() -> Self {
        NoEpochBumpToken(Token::bottom())
    }

    fn merge(&self, other: &Self) -> Self {
        NoEpochBumpToken(self.0.merge(&other.0))
    }

    fn leq(&self, other: &Self) -> bool {
        self.0.leq(&other.0)
    }
}

impl Canonical for NoEpochBumpToken {
    fn canonical(&self) -> Value {
        self.0.canonical()
    }
}

impl MutexProtocol for NoEpochBumpToken {
    type Config = ();

    const NAME: &'static str = "token-no-epoch-bump";
    const RETRY_REQUEST: bool = false;

    fn is_owner(&self, _: &(), me: &Uid) -> bool {
        self.0.is_owner(me)
    }

    fn request(&self, _: &(), me: &Uid) -> Result<Self> {
        Ok(NoEpochBumpToken(self.0.request(me)))
    }

    fn release(&self, _: &(), me: &Uid) -> Result<Self> {
        Ok(NoEpochBumpToken(self.0.release(me)))
    }

    fn upkeep(&self, _: &(), me: &Uid) -> Result<Self> {
        if !self.0.is_owner(me) {
            return Ok(Self::bottom());
        }
        Ok(match select_from(&self.0.wants, me) {
            None => Self::bottom(),
            Some(next) => NoEpochBumpToken(Token {
                os: Ownership::new(self.0.os.epoch, next),
                wants: Lattice::bottom(),
            }),
        })
    }

    fn epoch(&self) -> u64 {
        self.0.os.epoch
    }

    fn initial(_: &(), owner: &Uid) -> Option<Self> {
        Some(NoEpochBumpToken(Token::with_owner(0, owner.clone())))
    }

    fn view(&self) -> LockView<'_> {
        LockView::Token(&self.0)
    }

    fn facts(&self) -> Vec<LockFact> {
        self.0.facts()
    }
}
