//! Replica identifiers, dots, causal contexts and the observed-remove [`DotSet`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical::Canonical;
use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Replica identifier. Ordered lexicographically by bytes.
///
/// The empty id is reserved as the owner of bottom ownership statements and
/// cannot be constructed through [`Uid::new`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Uid(String);

impl Uid {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let valid = !id.is_empty()
            && id
                .bytes()
                .all(|b| b.is_ascii_graphic() && !matches!(b, b':' | b'/' | b','));
        if valid {
            Ok(Uid(id))
        } else {
            Err(Error::InvalidUid(id))
        }
    }

    pub(crate) fn bottom() -> Self {
        Uid(String::new())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Uid {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Uid::new(value)
    }
}

impl From<Uid> for String {
    fn from(value: Uid) -> Self {
        value.0
    }
}

impl std::str::FromStr for Uid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Uid::new(s)
    }
}

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Canonical for Uid {
    fn canonical(&self) -> Value {
        Value::String(self.0.clone())
    }
}

/// A globally unique event identifier: the `counter`-th event of `replica`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dot {
    pub replica: Uid,
    pub counter: u64,
}

impl Dot {
    pub fn new(replica: Uid, counter: u64) -> Self {
        debug_assert!(counter >= 1, "dot counters start at 1");
        Dot { replica, counter }
    }
}

impl fmt::Display for Dot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.replica, self.counter)
    }
}

impl fmt::Debug for Dot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// The set of dots a state has observed.
///
/// Stored as a contiguous prefix `1..=n` per replica plus a spill set of
/// dots that do not extend a prefix. Every mutation re-normalizes, so two
/// contexts holding the same dots are structurally equal.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DotContext {
    prefix: BTreeMap<Uid, u64>,
    spill: BTreeSet<Dot>,
}

impl DotContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.spill.is_empty()
    }

    pub fn contains(&self, dot: &Dot) -> bool {
        self.prefix
            .get(&dot.replica)
            .is_some_and(|&n| dot.counter <= n)
            || self.spill.contains(dot)
    }

    /// Largest counter observed for `replica`, 0 if none.
    pub fn max_counter(&self, replica: &Uid) -> u64 {
        let from_prefix = self.prefix.get(replica).copied().unwrap_or(0);
        let from_spill = self
            .spill
            .range(Dot::new(replica.clone(), 1)..=Dot::new(replica.clone(), u64::MAX))
            .next_back()
            .map_or(0, |d| d.counter);
        from_prefix.max(from_spill)
    }

    /// The dot following every dot `replica` has produced in this context.
    pub fn next_dot(&self, replica: &Uid) -> Dot {
        let max = self.max_counter(replica);
        assert!(max < u64::MAX, "dot counter overflow");
        Dot::new(replica.clone(), max + 1)
    }

    pub fn insert(&mut self, dot: Dot) {
        if !self.contains(&dot) {
            self.spill.insert(dot);
            self.normalize();
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (replica, &n) in &other.prefix {
            let entry = out.prefix.entry(replica.clone()).or_insert(0);
            *entry = (*entry).max(n);
        }
        out.spill.extend(other.spill.iter().cloned());
        out.normalize();
        out
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|d| other.contains(&d))
    }

    /// All dots, in order.
    pub fn iter(&self) -> impl Iterator<Item = Dot> + '_ {
        let prefixed = self
            .prefix
            .iter()
            .flat_map(|(r, &n)| (1..=n).map(move |c| Dot::new(r.clone(), c)));
        let mut all: Vec<Dot> = prefixed.chain(self.spill.iter().cloned()).collect();
        all.sort();
        all.into_iter()
    }

    pub fn len(&self) -> usize {
        self.prefix.values().map(|&n| n as usize).sum::<usize>() + self.spill.len()
    }

    // Spill is sorted by (replica, counter), so one pass absorbs every run
    // that became contiguous with its prefix.
    fn normalize(&mut self) {
        let spill = std::mem::take(&mut self.spill);
        for dot in spill {
            let n = self.prefix.get(&dot.replica).copied().unwrap_or(0);
            if dot.counter <= n {
                continue;
            }
            if dot.counter == n + 1 {
                self.prefix.insert(dot.replica.clone(), dot.counter);
            } else {
                self.spill.insert(dot);
            }
        }
    }
}

impl FromIterator<Dot> for DotContext {
    fn from_iter<I: IntoIterator<Item = Dot>>(iter: I) -> Self {
        let mut ctx = DotContext {
            prefix: BTreeMap::new(),
            spill: iter.into_iter().collect(),
        };
        ctx.normalize();
        ctx
    }
}

impl fmt::Debug for DotContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Canonical for DotContext {
    fn canonical(&self) -> Value {
        Value::Array(self.iter().map(|d| Value::String(d.to_string())).collect())
    }
}

/// Observed-remove set: elements are tagged with dots, and the causal context
/// remembers every dot ever seen so that removals survive merges.
///
/// Invariant: every dot in the store is in the context.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DotSet<E> {
    store: BTreeMap<Dot, E>,
    context: DotContext,
}

impl<E> Default for DotSet<E> {
    fn default() -> Self {
        DotSet {
            store: BTreeMap::new(),
            context: DotContext::new(),
        }
    }
}

impl<E: Ord + Clone> DotSet<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(store: BTreeMap<Dot, E>, context: DotContext) -> Result<Self> {
        if let Some(d) = store.keys().find(|d| !context.contains(d)) {
            return Err(Error::DotOutsideContext(d.to_string()));
        }
        Ok(DotSet { store, context })
    }

    pub fn store(&self) -> &BTreeMap<Dot, E> {
        &self.store
    }

    pub fn context(&self) -> &DotContext {
        &self.context
    }

    pub fn elements(&self) -> BTreeSet<E> {
        self.store.values().cloned().collect()
    }

    pub fn contains(&self, elem: &E) -> bool {
        self.store.values().any(|e| e == elem)
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    fn dots_of<'a>(&'a self, elem: &'a E) -> impl Iterator<Item = &'a Dot> + 'a {
        self.store.iter().filter(move |(_, e)| *e == elem).map(|(d, _)| d)
    }

    pub fn next_dot(&self, replica: &Uid) -> Dot {
        self.context.next_dot(replica)
    }

    /// Delta adding `elem` under a fresh dot of `replica`. The delta's context
    /// also covers the dots currently tagging `elem`, so older copies are
    /// superseded when it is merged.
    pub fn add_elem(&self, elem: E, replica: &Uid) -> Self {
        let dot = self.next_dot(replica);
        let context: DotContext = self
            .dots_of(&elem)
            .cloned()
            .chain(std::iter::once(dot.clone()))
            .collect();
        let mut store = BTreeMap::new();
        store.insert(dot, elem);
        DotSet { store, context }
    }

    /// Delta removing every observed copy of `elem`. Bottom when `elem` is absent.
    pub fn remove_elem(&self, elem: &E) -> Self {
        DotSet {
            store: BTreeMap::new(),
            context: self.dots_of(elem).cloned().collect(),
        }
    }
}

impl<E: Ord + Clone + fmt::Debug> Lattice for DotSet<E> {
    fn bottom() -> Self {
        Self::default()
    }

    fn merge(&self, other: &Self) -> Self {
        let mut store = BTreeMap::new();
        for (d, e) in &self.store {
            if other.store.contains_key(d) || !other.context.contains(d) {
                store.insert(d.clone(), e.clone());
            }
        }
        for (d, e) in &other.store {
            if !self.context.contains(d) {
                store.insert(d.clone(), e.clone());
            }
        }
        DotSet {
            store,
            context: self.context.union(&other.context),
        }
    }

    /// `other` has seen everything `self` has, and keeps no dot that `self`
    /// has already removed.
    fn leq(&self, other: &Self) -> bool {
        self.context.is_subset(&other.context)
            && other
                .store
                .keys()
                .all(|d| !self.context.contains(d) || self.store.contains_key(d))
    }

    fn is_bottom(&self) -> bool {
        self.store.is_empty() && self.context.is_empty()
    }
}

impl<E: fmt::Debug> fmt::Debug for DotSet<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DotSet")
            .field("store", &self.store)
            .field("context", &self.context)
            .finish()
    }
}

impl<E: Canonical> Canonical for DotSet<E> {
    fn canonical(&self) -> Value {
        let store = self
            .store
            .iter()
            .map(|(d, e)| Value::Array(vec![Value::String(d.to_string()), e.canonical()]))
            .collect();
        serde_json::json!({
            "context": self.context.canonical(),
            "store": Value::Array(store),
        })
    }
}
