//! Deterministic text representations used by the trace format.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value;

/// A deterministic, order-normalized JSON rendering of a value.
///
/// Two equal values always render identically. Object keys are sorted by
/// `serde_json`'s default map, and collections are emitted in sorted order.
pub trait Canonical {
    fn canonical(&self) -> Value;

    fn canonical_string(&self) -> String {
        self.canonical().to_string()
    }
}

impl<T: Canonical> Canonical for BTreeSet<T> {
    fn canonical(&self) -> Value {
        Value::Array(self.iter().map(Canonical::canonical).collect())
    }
}

impl<V: Canonical> Canonical for BTreeMap<String, V> {
    fn canonical(&self) -> Value {
        Value::Object(
            self.iter()
                .map(|(k, v)| (k.clone(), v.canonical()))
                .collect(),
        )
    }
}
