//! Runs a bundled scenario and a small batch of seeds.

use ardt_locks::cli::summary_text;
use ardt_locks::sim::{self, Scenario};

fn main() -> ardt_locks::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/token-lossy.toml");
    let scenario = Scenario::load(path)?;
    let outcome = sim::run_scenario(&scenario, false)?;
    print!("{}", summary_text(&outcome.summary));

    let runs = sim::run_many(&scenario, 20, 1)?;
    let bad = runs.iter().filter(|r| !r.ok()).count();
    println!("20 seeds, {bad} with violations");
    for (id, n) in sim::total_acquisitions(&runs) {
        println!("  {id}: {n} acquisitions");
    }
    Ok(())
}
