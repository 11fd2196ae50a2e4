//! Join-semilattices and the generic constructions the protocols are built from.
//!
//! Every replicated value in this crate implements [`Lattice`]. Operations never
//! mutate state; they return a *delta* of the same type, and a runtime applies it
//! by merging. Equality is structural on canonical representations, so the
//! lattice laws can be checked with `==`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

/// A state-based replicated type: a join-semilattice with an explicit bottom.
///
/// `merge` must be idempotent, commutative and associative, and `bottom()` must
/// be its identity.
pub trait Lattice: Clone + PartialEq + Debug {
    /// The merge-neutral ("unchanged") value.
    fn bottom() -> Self;

    /// Least upper bound of `self` and `other`.
    fn merge(&self, other: &Self) -> Self;

    /// Lattice order. Implementations with a cheap structural definition
    /// override this; the default derives it from `merge`.
    fn leq(&self, other: &Self) -> bool {
        self.merge(other) == *other
    }

    fn is_bottom(&self) -> bool {
        *self == Self::bottom()
    }

    /// Merges `delta` into `self`, returning whether the state changed.
    fn merge_in(&mut self, delta: &Self) -> bool {
        if delta.leq(self) {
            return false;
        }
        *self = self.merge(delta);
        true
    }
}

/// Merge for totally ordered values: the larger input wins.
pub fn merge_by_ordering<T: Ord + Clone>(a: &T, b: &T) -> T {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// A value tagged with a round counter.
///
/// Higher counters dominate; equal counters merge their values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Epoch<E> {
    pub counter: u64,
    pub value: E,
}

impl<E> Epoch<E> {
    pub fn new(counter: u64, value: E) -> Self {
        Epoch { counter, value }
    }
}

impl<E: Lattice> Lattice for Epoch<E> {
    fn bottom() -> Self {
        Epoch::new(0, E::bottom())
    }

    fn merge(&self, other: &Self) -> Self {
        match self.counter.cmp(&other.counter) {
            std::cmp::Ordering::Greater => self.clone(),
            std::cmp::Ordering::Less => other.clone(),
            std::cmp::Ordering::Equal => Epoch::new(self.counter, self.value.merge(&other.value)),
        }
    }

    fn leq(&self, other: &Self) -> bool {
        self.counter < other.counter
            || (self.counter == other.counter && self.value.leq(&other.value))
    }
}

/// Implements [`Lattice`] for a struct whose fields are all lattices, merging
/// component-wise.
///
/// ```
/// use ardt_locks::{derive_product_lattice, lattice::Lattice};
/// use std::collections::BTreeSet;
///
/// #[derive(Clone, Debug, PartialEq)]
/// struct Pair { a: BTreeSet<u8>, b: BTreeSet<u8> }
/// derive_product_lattice!(Pair { a, b });
///
/// let x = Pair { a: [1].into(), b: BTreeSet::new() };
/// let y = Pair { a: [2].into(), b: [3].into() };
/// assert_eq!(x.merge(&y), Pair { a: [1, 2].into(), b: [3].into() });
/// ```
#[macro_export]
macro_rules! derive_product_lattice {
    ($ty:ident $(<$($gen:ident),+>)? { $($field:ident),+ $(,)? }) => {
        impl$(<$($gen: $crate::lattice::Lattice),+>)? $crate::lattice::Lattice for $ty$(<$($gen),+>)? {
            fn bottom() -> Self {
                $ty { $($field: $crate::lattice::Lattice::bottom()),+ }
            }

            fn merge(&self, other: &Self) -> Self {
                $ty { $($field: $crate::lattice::Lattice::merge(&self.$field, &other.$field)),+ }
            }

            fn leq(&self, other: &Self) -> bool {
                true $(&& $crate::lattice::Lattice::leq(&self.$field, &other.$field))+
            }
        }
    };
}

impl<A: Lattice, B: Lattice> Lattice for (A, B) {
    fn bottom() -> Self {
        (A::bottom(), B::bottom())
    }

    fn merge(&self, other: &Self) -> Self {
        (self.0.merge(&other.0), self.1.merge(&other.1))
    }

    fn leq(&self, other: &Self) -> bool {
        self.0.leq(&other.0) && self.1.leq(&other.1)
    }
}

impl<A: Lattice, B: Lattice, C: Lattice> Lattice for (A, B, C) {
    fn bottom() -> Self {
        (A::bottom(), B::bottom(), C::bottom())
    }

    fn merge(&self, other: &Self) -> Self {
        (
            self.0.merge(&other.0),
            self.1.merge(&other.1),
            self.2.merge(&other.2),
        )
    }

    fn leq(&self, other: &Self) -> bool {
        self.0.leq(&other.0) && self.1.leq(&other.1) && self.2.leq(&other.2)
    }
}

/// Grow-only set.
impl<T: Ord + Clone + Debug> Lattice for BTreeSet<T> {
    fn bottom() -> Self {
        BTreeSet::new()
    }

    fn merge(&self, other: &Self) -> Self {
        self.union(other).cloned().collect()
    }

    fn leq(&self, other: &Self) -> bool {
        self.is_subset(other)
    }
}

/// Key-wise merge. Absent keys are bottom, and bottom entries are never stored,
/// which keeps the representation canonical.
impl<K: Ord + Clone + Debug, V: Lattice> Lattice for BTreeMap<K, V> {
    fn bottom() -> Self {
        BTreeMap::new()
    }

    fn merge(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other {
            let merged = match out.get(k) {
                Some(mine) => mine.merge(v),
                None => v.clone(),
            };
            if merged.is_bottom() {
                out.remove(k);
            } else {
                out.insert(k.clone(), merged);
            }
        }
        out
    }

    fn leq(&self, other: &Self) -> bool {
        self.iter().all(|(k, v)| match other.get(k) {
            Some(theirs) => v.leq(theirs),
            None => v.is_bottom(),
        })
    }
}

/// Builds a map delta touching one key.
pub fn map_delta<K: Ord, V: Lattice>(key: K, value: V) -> BTreeMap<K, V> {
    let mut out = BTreeMap::new();
    if !value.is_bottom() {
        out.insert(key, value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
    struct Own(u64, &'static str);

    #[test]
    fn ordering_merge_picks_larger() {
        let a = Own(5, "A");
        assert_eq!(merge_by_ordering(&a, &a), a);
        assert_eq!(merge_by_ordering(&Own(5, "A"), &Own(3, "B")), Own(5, "A"));
        assert_eq!(merge_by_ordering(&Own(5, "A"), &Own(5, "B")), Own(5, "B"));
        assert_eq!(merge_by_ordering(&Own(5, "B"), &Own(5, "A")), Own(5, "B"));
    }

    #[test]
    fn epoch_higher_counter_wins() {
        let x = Epoch::new(2, BTreeSet::from([1u8]));
        let y = Epoch::new(1, BTreeSet::from([2u8]));
        assert_eq!(x.merge(&y), x);
        assert_eq!(y.merge(&x), x);
    }

    #[test]
    fn epoch_equal_counters_merge_values() {
        let x = Epoch::new(3, BTreeSet::from(["v1"]));
        let y = Epoch::new(3, BTreeSet::from(["v2"]));
        assert_eq!(x.merge(&y), Epoch::new(3, BTreeSet::from(["v1", "v2"])));
        assert_eq!(x.merge(&x), x);
    }

    #[test]
    fn epoch_counter_never_decreases() {
        for a in 0..4u64 {
            for b in 0..4u64 {
                let m = Epoch::new(a, BTreeSet::<u8>::new()).merge(&Epoch::new(b, BTreeSet::new()));
                assert!(m.counter >= a && m.counter >= b);
            }
        }
    }

    #[derive(Clone, Debug, PartialEq)]
    struct Product {
        left: BTreeSet<u8>,
        right: Epoch<BTreeSet<u8>>,
    }
    crate::derive_product_lattice!(Product { left, right });

    #[test]
    fn product_merges_componentwise_with_bottom_identity() {
        let a = Product {
            left: [1].into(),
            right: Epoch::new(1, [7].into()),
        };
        let b = Product {
            left: [2].into(),
            right: Epoch::new(1, [8].into()),
        };
        let m = a.merge(&b);
        assert_eq!(m.left, BTreeSet::from([1, 2]));
        assert_eq!(m.right, Epoch::new(1, [7, 8].into()));
        assert_eq!(a.merge(&Product::bottom()), a);
        assert!(Product::bottom().leq(&a));
    }

    #[test]
    fn map_drops_bottom_entries() {
        let mut m: BTreeMap<&str, BTreeSet<u8>> = BTreeMap::new();
        m.insert("k", BTreeSet::new());
        let merged = BTreeMap::<&str, BTreeSet<u8>>::bottom().merge(&m);
        assert!(merged.is_empty());
        assert!(m.leq(&BTreeMap::new()));
        assert!(map_delta("k", BTreeSet::<u8>::new()).is_empty());
    }

    #[test]
    fn merge_in_reports_change() {
        let mut s = BTreeSet::from([1u8]);
        assert!(!s.merge_in(&BTreeSet::from([1])));
        assert!(s.merge_in(&BTreeSet::from([2])));
        assert_eq!(s, BTreeSet::from([1, 2]));
    }
}
