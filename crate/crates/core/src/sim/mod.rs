//! Deterministic simulation and bounded model checking of replicated locks.
//!
//! [`run_scenario`] drives one seeded execution over an adversarial network;
//! [`explore_scenario`] enumerates every execution of a small instance.
//! Both evaluate [`check::check_snapshot`] after every transition.

pub mod check;
pub mod engine;
pub mod explore;
pub mod scenario;
pub mod subject;
pub mod trace;
pub mod world;

pub use check::{check_single_owner, check_snapshot, Violation, ViolationKind};
pub use engine::{MessageStats, RunOutcome, RunSummary, Simulation};
pub use explore::{explore, explore_with, Checks, ExploreBounds, ExploreOutcome, ExploreReport};
pub use scenario::{LockKind, NetworkModel, Partition, ProtocolKind, ReplicaSpec, Scenario, Workload};
pub use subject::{Subject, SubjectConfig, MAIN_LOCK};
pub use world::{Envelope, GlobalState, History, Payload, ReplicaState};

use std::collections::BTreeMap;

use crate::error::Result;
use crate::excl::{EpochLog, Excl, ResourceMapA, ResourceMapB};
use crate::mutants::NoEpochBumpToken;
use crate::protocol::{Membership, Token, Voting};

/// Calls `$body` with the type alias `$subject` bound to the scenario's
/// subject type and `$config` bound to its configuration.
macro_rules! with_subject {
    ($scenario:expr, $ids:expr, |$subject:ident, $config:ident| $body:expr) => {{
        let scenario: &Scenario = $scenario;
        let members = Membership::new(scenario.member_ids($ids)?);
        let resources = scenario.resource_ids();
        let with_resources = |lock| SubjectConfig {
            lock,
            resources: resources.clone(),
        };
        match (scenario.protocol, scenario.resource_lock) {
            (ProtocolKind::Token, _) => {
                type $subject = Token;
                let $config = SubjectConfig::single(());
                $body
            }
            (ProtocolKind::TokenNoEpochBump, _) => {
                type $subject = NoEpochBumpToken;
                let $config = SubjectConfig::single(());
                $body
            }
            (ProtocolKind::Voting, _) => {
                type $subject = Voting;
                let $config = SubjectConfig::single(members);
                $body
            }
            (ProtocolKind::ExclToken, _) => {
                type $subject = Excl<Token, EpochLog>;
                let $config = SubjectConfig::single(());
                $body
            }
            (ProtocolKind::ExclVoting, _) => {
                type $subject = Excl<Voting, EpochLog>;
                let $config = SubjectConfig::single(members);
                $body
            }
            (ProtocolKind::ResourceMapA, LockKind::Token) => {
                type $subject = ResourceMapA<Token, EpochLog>;
                let $config = with_resources(());
                $body
            }
            (ProtocolKind::ResourceMapA, LockKind::Voting) => {
                type $subject = ResourceMapA<Voting, EpochLog>;
                let $config = SubjectConfig { lock: members, resources };
                $body
            }
            (ProtocolKind::ResourceMapB, LockKind::Token) => {
                type $subject = ResourceMapB<Token, EpochLog>;
                let $config = with_resources(());
                $body
            }
            (ProtocolKind::ResourceMapB, LockKind::Voting) => {
                type $subject = ResourceMapB<Voting, EpochLog>;
                let $config = SubjectConfig { lock: members, resources };
                $body
            }
        }
    }};
}

/// Runs a scenario to completion. `trace` enables event recording.
pub fn run_scenario(scenario: &Scenario, trace: bool) -> Result<RunOutcome> {
    scenario.validate()?;
    let ids = scenario.replica_ids()?;
    with_subject!(scenario, &ids, |S, config| {
        Ok(Simulation::<S>::new(scenario, config, trace)?.run())
    })
}

/// Exhaustively explores the scenario's protocol over its replicas and
/// initial owner. Network, workload and step settings are ignored.
pub fn explore_scenario(scenario: &Scenario, bounds: ExploreBounds, checks: Checks) -> Result<ExploreReport> {
    scenario.validate()?;
    let ids = scenario.replica_ids()?;
    let owner = scenario.initial_owner_id(&ids)?;
    with_subject!(scenario, &ids, |S, config| {
        Ok(match checks {
            Checks::All => explore::<S>(&ids, &owner, &config, bounds),
            Checks::SingleOwner => explore_with(&ids, &owner, &config, bounds, check_single_owner::<S>),
        })
    })
}

/// Runs `count` scenarios with consecutive seeds starting at
/// `scenario.seed`, on up to `jobs` threads. Results are in seed order and
/// do not depend on `jobs`.
pub fn run_many(scenario: &Scenario, count: u64, jobs: usize) -> Result<Vec<RunSummary>> {
    use rayon::prelude::*;

    scenario.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut s = scenario.clone();
                s.seed = scenario.seed.wrapping_add(i);
                run_scenario(&s, false).map(|o| o.summary)
            })
            .collect()
    })
}

/// Acquisition totals across many runs, keyed by replica.
pub fn total_acquisitions(summaries: &[RunSummary]) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for s in summaries {
        for (id, n) in &s.acquisitions {
            *out.entry(id.clone()).or_default() += n;
        }
    }
    out
}
