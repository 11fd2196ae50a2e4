//! Exclusive access to replicated application data.
//!
//! [`Excl`] pairs a lock with a protected value. Writes go through
//! [`Excl::transform`], which only yields an effect at the current owner.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::canonical::Canonical;
use crate::derive_product_lattice;
use crate::dots::Uid;
use crate::error::Result;
use crate::lattice::{map_delta, Lattice};
use crate::protocol::MutexProtocol;

/// A value of type `T` guarded by the lock protocol `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Excl<L, T> {
    pub lock: L,
    pub value: T,
}

derive_product_lattice!(Excl<L, T> { lock, value });

impl<L: MutexProtocol, T: Lattice> Excl<L, T> {
    pub fn new(lock: L, value: T) -> Self {
        Excl { lock, value }
    }

    fn lift(lock: L) -> Self {
        Excl {
            lock,
            value: T::bottom(),
        }
    }

    pub fn is_owner(&self, config: &L::Config, me: &Uid) -> bool {
        self.lock.is_owner(config, me)
    }

    /// Applies `f` to the protected value if `me` owns the lock. `f` returns a
    /// delta of `T`.
    pub fn transform(&self, config: &L::Config, me: &Uid, f: impl FnOnce(&T) -> T) -> Self {
        if self.is_owner(config, me) {
            Excl {
                lock: L::bottom(),
                value: f(&self.value),
            }
        } else {
            Self::bottom()
        }
    }

    pub fn request(&self, config: &L::Config, me: &Uid) -> Result<Self> {
        self.lock.request(config, me).map(Self::lift)
    }

    pub fn release(&self, config: &L::Config, me: &Uid) -> Result<Self> {
        self.lock.release(config, me).map(Self::lift)
    }

    pub fn upkeep(&self, config: &L::Config, me: &Uid) -> Result<Self> {
        self.lock.upkeep(config, me).map(Self::lift)
    }
}

impl<L: Canonical, T: Canonical> Canonical for Excl<L, T> {
    fn canonical(&self) -> Value {
        json!({ "lock": self.lock.canonical(), "value": self.value.canonical() })
    }
}

/// One record of the demo log: `writer` wrote while holding ownership epoch `epoch`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LogEntry {
    pub epoch: u64,
    pub writer: Uid,
}

/// Grow-only log of writes keyed by ownership epoch. Under correct mutual
/// exclusion no epoch ever has two writers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EpochLog {
    pub entries: BTreeSet<LogEntry>,
}

impl EpochLog {
    /// A delta holding a single entry.
    pub fn entry(epoch: u64, writer: Uid) -> Self {
        EpochLog {
            entries: BTreeSet::from([LogEntry { epoch, writer }]),
        }
    }

    /// Epochs written by more than one replica.
    pub fn conflicting_epochs(&self) -> Vec<u64> {
        let mut writers: BTreeMap<u64, usize> = BTreeMap::new();
        for e in &self.entries {
            *writers.entry(e.epoch).or_default() += 1;
        }
        writers
            .into_iter()
            .filter(|&(_, n)| n > 1)
            .map(|(epoch, _)| epoch)
            .collect()
    }
}

derive_product_lattice!(EpochLog { entries });

impl Canonical for EpochLog {
    fn canonical(&self) -> Value {
        Value::Array(
            self.entries
                .iter()
                .map(|e| Value::String(format!("{}:{}", e.epoch, e.writer)))
                .collect(),
        )
    }
}

/// Independently locked resources: one lock per resource id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResourceMapA<L, T> {
    pub resources: BTreeMap<String, Excl<L, T>>,
}

impl<L: MutexProtocol, T: Lattice> Lattice for ResourceMapA<L, T> {
    fn bottom() -> Self {
        ResourceMapA {
            resources: BTreeMap::new(),
        }
    }

    fn merge(&self, other: &Self) -> Self {
        ResourceMapA {
            resources: self.resources.merge(&other.resources),
        }
    }

    fn leq(&self, other: &Self) -> bool {
        self.resources.leq(&other.resources)
    }
}

impl<L: MutexProtocol, T: Lattice> ResourceMapA<L, T> {
    /// The entry for `id`, or bottom if it has never been touched.
    pub fn get(&self, id: &str) -> Excl<L, T> {
        self.resources.get(id).cloned().unwrap_or_else(Excl::bottom)
    }

    /// Wraps a per-resource delta into a map delta.
    pub fn at(id: &str, delta: Excl<L, T>) -> Self {
        ResourceMapA {
            resources: map_delta(id.to_owned(), delta),
        }
    }

    pub fn request(&self, id: &str, config: &L::Config, me: &Uid) -> Result<Self> {
        Ok(Self::at(id, self.get(id).request(config, me)?))
    }

    pub fn release(&self, id: &str, config: &L::Config, me: &Uid) -> Result<Self> {
        Ok(Self::at(id, self.get(id).release(config, me)?))
    }

    pub fn upkeep(&self, id: &str, config: &L::Config, me: &Uid) -> Result<Self> {
        Ok(Self::at(id, self.get(id).upkeep(config, me)?))
    }

    pub fn transform(
        &self,
        id: &str,
        config: &L::Config,
        me: &Uid,
        f: impl FnOnce(&T) -> T,
    ) -> Self {
        Self::at(id, self.get(id).transform(config, me, f))
    }
}

impl<L: Canonical, T: Canonical> Canonical for ResourceMapA<L, T> {
    fn canonical(&self) -> Value {
        self.resources.canonical()
    }
}

/// All resources behind a single lock.
pub type ResourceMapB<L, T> = Excl<L, BTreeMap<String, T>>;
