use serde_json::{json, Value};

use crate::canonical::Canonical;
use crate::derive_product_lattice;
use crate::dots::{DotSet, Uid};
use crate::error::Result;
use crate::lattice::{merge_by_ordering, Lattice};

use super::{LockFact, LockView, MutexProtocol};

/// Who holds the token, and since which epoch.
///
/// Field order matters: the derived ordering compares the epoch first and
/// falls back to the owner id, and merge keeps the larger statement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ownership {
    pub epoch: u64,
    pub owner: Uid,
}

impl Ownership {
    pub fn new(epoch: u64, owner: Uid) -> Self {
        Ownership { epoch, owner }
    }
}

impl Lattice for Ownership {
    fn bottom() -> Self {
        Ownership::new(0, Uid::bottom())
    }

    fn merge(&self, other: &Self) -> Self {
        merge_by_ordering(self, other)
    }

    fn leq(&self, other: &Self) -> bool {
        self <= other
    }
}

impl Canonical for Ownership {
    fn canonical(&self) -> Value {
        json!({ "epoch": self.epoch, "owner": self.owner.as_str() })
    }
}

/// Token-passing mutual exclusion: the ownership statement plus the set of
/// replicas asking for the token.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub os: Ownership,
    pub wants: DotSet<Uid>,
}

derive_product_lattice!(Token { os, wants });

impl Token {
    pub fn with_owner(epoch: u64, owner: Uid) -> Self {
        Token {
            os: Ownership::new(epoch, owner),
            wants: DotSet::new(),
        }
    }

    pub fn is_owner(&self, me: &Uid) -> bool {
        self.os.owner == *me
    }

    pub fn request(&self, me: &Uid) -> Token {
        Token {
            os: Ownership::bottom(),
            wants: self.wants.add_elem(me.clone(), me),
        }
    }

    pub fn release(&self, me: &Uid) -> Token {
        Token {
            os: Ownership::bottom(),
            wants: self.wants.remove_elem(me),
        }
    }

    /// Hands the token to the selected requester when called by the owner.
    pub fn upkeep(&self, me: &Uid) -> Token {
        if !self.is_owner(me) {
            return Token::bottom();
        }
        match select_from(&self.wants, me) {
            None => Token::bottom(),
            Some(next) => Token {
                os: Ownership::new(self.os.epoch + 1, next),
                wants: DotSet::bottom(),
            },
        }
    }
}

/// The largest requester, unless that is `me`.
///
/// The filter applies to the maximum only: if `me` is the largest requester the
/// result is `None` even when others are waiting, so an owner that still wants
/// the token keeps it until it releases.
pub fn select_from(wants: &DotSet<Uid>, me: &Uid) -> Option<Uid> {
    wants.elements().into_iter().next_back().filter(|id| id != me)
}

impl MutexProtocol for Token {
    type Config = ();

    const NAME: &'static str = "token";
    const RETRY_REQUEST: bool = false;

    fn is_owner(&self, _: &(), me: &Uid) -> bool {
        Token::is_owner(self, me)
    }

    fn request(&self, _: &(), me: &Uid) -> Result<Self> {
        Ok(Token::request(self, me))
    }

    fn release(&self, _: &(), me: &Uid) -> Result<Self> {
        Ok(Token::release(self, me))
    }

    fn upkeep(&self, _: &(), me: &Uid) -> Result<Self> {
        Ok(Token::upkeep(self, me))
    }

    fn epoch(&self) -> u64 {
        self.os.epoch
    }

    fn initial(_: &(), owner: &Uid) -> Option<Self> {
        Some(Token::with_owner(0, owner.clone()))
    }

    fn view(&self) -> LockView<'_> {
        LockView::Token(self)
    }

    fn facts(&self) -> Vec<LockFact> {
        if self.os.is_bottom() {
            Vec::new()
        } else {
            vec![LockFact::Ownership {
                epoch: self.os.epoch,
                owner: self.os.owner.clone(),
            }]
        }
    }
}

impl Canonical for Token {
    fn canonical(&self) -> Value {
        json!({ "os": self.os.canonical(), "wants": self.wants.canonical() })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn uid(s: &str) -> Uid {
        Uid::new(s).unwrap()
    }

    fn wanting(ids: &[&str]) -> DotSet<Uid> {
        let mut s = DotSet::new();
        for id in ids {
            let id = uid(id);
            s = s.merge(&s.add_elem(id.clone(), &id));
        }
        s
    }

    #[test]
    fn ownership_merge_order() {
        let a5 = Ownership::new(5, uid("A"));
        let b3 = Ownership::new(3, uid("B"));
        let b5 = Ownership::new(5, uid("B"));
        assert_eq!(a5.merge(&b3), a5);
        assert_eq!(a5.merge(&b5), b5);
        assert_eq!(a5.merge(&a5), a5);
        assert_eq!(a5.merge(&Ownership::bottom()), a5);
    }

    #[test]
    fn is_owner_examples() {
        let s = Token::with_owner(0, uid("A"));
        assert!(s.is_owner(&uid("A")));
        assert!(!s.is_owner(&uid("B")));
        let handed = s.merge(&Token {
            os: Ownership::new(1, uid("B")),
            wants: DotSet::bottom(),
        });
        assert!(!handed.is_owner(&uid("A")));
    }

    #[test]
    fn request_adds_self_and_keeps_ownership() {
        let s = Token::with_owner(0, uid("A"));
        let me = uid("B");
        let once = s.merge(&s.request(&me));
        assert_eq!(once.wants.elements(), BTreeSet::from([me.clone()]));
        assert_eq!(once.os, s.os);
        let twice = once.merge(&once.request(&me));
        assert_eq!(twice.wants.elements(), once.wants.elements());
        // Concurrent duplicate requests from the same base state.
        let both = s.merge(&s.request(&me)).merge(&s.request(&me));
        assert_eq!(both.wants.elements(), BTreeSet::from([me]));
    }

    #[test]
    fn release_removes_only_self() {
        let s = Token {
            os: Ownership::new(2, uid("A")),
            wants: wanting(&["A", "B"]),
        };
        let released = s.merge(&s.release(&uid("A")));
        assert_eq!(released.wants.elements(), BTreeSet::from([uid("B")]));
        assert_eq!(released.os, s.os);
        assert!(s.release(&uid("C")).is_bottom());
    }

    #[test]
    fn upkeep_hands_to_largest_requester() {
        let s = Token {
            os: Ownership::new(4, uid("A")),
            wants: wanting(&["B", "C"]),
        };
        let delta = s.upkeep(&uid("A"));
        assert_eq!(delta.os, Ownership::new(5, uid("C")));
        assert!(delta.wants.is_bottom());
    }

    #[test]
    fn upkeep_keeps_token_when_owner_is_largest_requester() {
        let s = Token {
            os: Ownership::new(0, uid("A")),
            wants: wanting(&["A"]),
        };
        assert!(s.upkeep(&uid("A")).is_bottom());
        let s = Token {
            os: Ownership::new(0, uid("C")),
            wants: wanting(&["A", "C"]),
        };
        assert!(s.upkeep(&uid("C")).is_bottom());
    }

    #[test]
    fn upkeep_by_non_owner_is_bottom() {
        let s = Token {
            os: Ownership::new(0, uid("A")),
            wants: wanting(&["B"]),
        };
        assert!(s.upkeep(&uid("B")).is_bottom());
    }

    #[test]
    fn select_from_filters_the_maximum() {
        assert_eq!(select_from(&wanting(&["A", "B"]), &uid("A")), Some(uid("B")));
        assert_eq!(select_from(&wanting(&["A", "B"]), &uid("B")), None);
        assert_eq!(select_from(&DotSet::new(), &uid("A")), None);
    }
}
