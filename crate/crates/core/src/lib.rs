//! Mutual exclusion as a replicated data type.
//!
//! Lock protocols are ordinary lattice-merged values: every operation returns a
//! delta, replicas exchange deltas over whatever network is available, and the
//! lattice laws make delivery order and duplication irrelevant. The crate
//! provides
//!
//! * [`lattice`]: the merge contract and generic constructions,
//! * [`dots`]: replica ids, causal contexts and the observed-remove [`dots::DotSet`],
//! * [`protocol`]: the token-passing and majority-voting locks,
//! * [`excl`]: exclusive access wrappers for application data,
//! * [`sim`]: a deterministic adversarial network simulator, a snapshot
//!   checker and a bounded exhaustive explorer.

pub mod canonical;
pub mod cli;
pub mod dots;
pub mod error;
pub mod excl;
pub mod gen;
pub mod lattice;
pub mod laws;
#[doc(hidden)]
pub mod mutants;
pub mod protocol;
pub mod sim;

pub use error::{Error, Result};
