//! What the simulator replicates: a lock protocol, or application data guarded
//! by one or more locks.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::hash::Hash;

use crate::canonical::Canonical;
use crate::dots::Uid;
use crate::error::Result;
use crate::excl::{EpochLog, Excl, ResourceMapA, ResourceMapB};
use crate::lattice::Lattice;
use crate::mutants::NoEpochBumpToken;
use crate::protocol::{MutexProtocol, Token, Voting};

/// Key of the single lock in subjects that have only one.
pub const MAIN_LOCK: &str = "lock";

/// Lock configuration plus the resource ids of multi-resource subjects.
#[derive(Clone, Debug)]
pub struct SubjectConfig<C> {
    pub lock: C,
    pub resources: Vec<String>,
}

impl<C> SubjectConfig<C> {
    pub fn single(lock: C) -> Self {
        SubjectConfig {
            lock,
            resources: Vec::new(),
        }
    }
}

pub type ConfigOf<S> = SubjectConfig<<<S as Subject>::Lock as MutexProtocol>::Config>;

/// A replicated state the simulator can drive.
///
/// Every subject exposes one or more keyed locks. Lock operations are lifted
/// into subject deltas with [`Subject::lift`]; [`Subject::work`] is the
/// application write an owner performs while it holds a lock.
pub trait Subject: Lattice + Canonical + Eq + Hash + Ord + Send + Sync + 'static {
    type Lock: MutexProtocol;

    fn keys(config: &ConfigOf<Self>) -> Vec<String>;

    fn lock(&self, key: &str) -> Cow<'_, Self::Lock>;

    fn lift(key: &str, delta: Self::Lock) -> Self;

    /// The owner's write for `key`; bottom for bare protocols.
    fn work(&self, _config: &ConfigOf<Self>, _key: &str, _me: &Uid) -> Self {
        Self::bottom()
    }

    /// Demo logs held by this state, keyed by lock.
    fn logs(&self) -> Vec<(String, &EpochLog)> {
        Vec::new()
    }

    fn is_owner(&self, config: &ConfigOf<Self>, key: &str, me: &Uid) -> bool {
        self.lock(key).is_owner(&config.lock, me)
    }

    fn request(&self, config: &ConfigOf<Self>, key: &str, me: &Uid) -> Result<Self> {
        Ok(Self::lift(key, self.lock(key).request(&config.lock, me)?))
    }

    fn release(&self, config: &ConfigOf<Self>, key: &str, me: &Uid) -> Result<Self> {
        Ok(Self::lift(key, self.lock(key).release(&config.lock, me)?))
    }

    fn upkeep(&self, config: &ConfigOf<Self>, key: &str, me: &Uid) -> Result<Self> {
        Ok(Self::lift(key, self.lock(key).upkeep(&config.lock, me)?))
    }

    /// Delta making `owner` the initial holder of every lock, if the protocol
    /// starts with an owner.
    fn initial(config: &ConfigOf<Self>, owner: &Uid) -> Option<Self> {
        let mut out: Option<Self> = None;
        for key in Self::keys(config) {
            let lock = Self::Lock::initial(&config.lock, owner)?;
            let d = Self::lift(&key, lock);
            out = Some(match out {
                Some(acc) => acc.merge(&d),
                None => d,
            });
        }
        out
    }
}

macro_rules! bare_protocol_subject {
    ($($ty:ty),+) => {$(
        impl Subject for $ty {
            type Lock = $ty;

            fn keys(_: &ConfigOf<Self>) -> Vec<String> {
                vec![MAIN_LOCK.to_owned()]
            }

            fn lock(&self, _: &str) -> Cow<'_, Self> {
                Cow::Borrowed(self)
            }

            fn lift(_: &str, delta: Self) -> Self {
                delta
            }
        }
    )+};
}

bare_protocol_subject!(Token, Voting, NoEpochBumpToken);

impl<L: MutexProtocol> Subject for Excl<L, EpochLog> {
    type Lock = L;

    fn keys(_: &ConfigOf<Self>) -> Vec<String> {
        vec![MAIN_LOCK.to_owned()]
    }

    fn lock(&self, _: &str) -> Cow<'_, L> {
        Cow::Borrowed(&self.lock)
    }

    fn lift(_: &str, delta: L) -> Self {
        Excl {
            lock: delta,
            value: EpochLog::bottom(),
        }
    }

    fn work(&self, config: &ConfigOf<Self>, _: &str, me: &Uid) -> Self {
        let epoch = self.lock.epoch();
        self.transform(&config.lock, me, |_| EpochLog::entry(epoch, me.clone()))
    }

    fn logs(&self) -> Vec<(String, &EpochLog)> {
        vec![(MAIN_LOCK.to_owned(), &self.value)]
    }
}

impl<L: MutexProtocol> Subject for ResourceMapA<L, EpochLog> {
    type Lock = L;

    fn keys(config: &ConfigOf<Self>) -> Vec<String> {
        config.resources.clone()
    }

    fn lock(&self, key: &str) -> Cow<'_, L> {
        match self.resources.get(key) {
            Some(e) => Cow::Borrowed(&e.lock),
            None => Cow::Owned(L::bottom()),
        }
    }

    fn lift(key: &str, delta: L) -> Self {
        ResourceMapA::at(
            key,
            Excl {
                lock: delta,
                value: EpochLog::bottom(),
            },
        )
    }

    fn work(&self, config: &ConfigOf<Self>, key: &str, me: &Uid) -> Self {
        let epoch = self.lock(key).epoch();
        self.transform(key, &config.lock, me, |_| EpochLog::entry(epoch, me.clone()))
    }

    fn logs(&self) -> Vec<(String, &EpochLog)> {
        self.resources
            .iter()
            .map(|(k, e)| (k.clone(), &e.value))
            .collect()
    }
}

impl<L: MutexProtocol> Subject for ResourceMapB<L, EpochLog> {
    type Lock = L;

    fn keys(_: &ConfigOf<Self>) -> Vec<String> {
        vec![MAIN_LOCK.to_owned()]
    }

    fn lock(&self, _: &str) -> Cow<'_, L> {
        Cow::Borrowed(&self.lock)
    }

    fn lift(_: &str, delta: L) -> Self {
        Excl {
            lock: delta,
            value: BTreeMap::new(),
        }
    }

    /// Writes one entry into every resource, since one lock covers them all.
    fn work(&self, config: &ConfigOf<Self>, _: &str, me: &Uid) -> Self {
        let epoch = self.lock.epoch();
        self.transform(&config.lock, me, |_| {
            config
                .resources
                .iter()
                .map(|r| (r.clone(), EpochLog::entry(epoch, me.clone())))
                .collect()
        })
    }

    fn logs(&self) -> Vec<(String, &EpochLog)> {
        self.value.iter().map(|(k, v)| (k.clone(), v)).collect()
    }
}
