//! Exhaustive search of a small token instance, then of the broken variant
//! whose upkeep forgets to bump the epoch.

use ardt_locks::sim::{self, Checks, ExploreBounds, ProtocolKind, ReplicaSpec, Scenario};

fn main() -> ardt_locks::Result<()> {
    let bounds = ExploreBounds {
        ops_per_replica: 2,
        max_in_flight: 4,
        max_deliveries: 4,
        ..ExploreBounds::default()
    };
    let token = Scenario {
        replicas: ReplicaSpec::Count(2),
        ..Scenario::default()
    };
    println!("{}\n", sim::explore_scenario(&token, bounds, Checks::All)?);

    let broken = Scenario {
        protocol: ProtocolKind::TokenNoEpochBump,
        initial_owner: Some("r2".into()),
        ..token
    };
    println!("{}", sim::explore_scenario(&broken, bounds, Checks::SingleOwner)?);
    Ok(())
}
