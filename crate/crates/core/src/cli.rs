//! The `ardt-locks` command line.
//!
//! Exit status: 0 on success, 1 when a safety check or law fails, 2 for
//! usage errors and invalid scenarios, 3 when exploration runs out of its
//! state budget.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::excl::{EpochLog, Excl};
use crate::gen::LatticeType;
use crate::protocol::{Membership, Token, Voting};
use crate::sim::{
    self, Checks, ExploreBounds, ExploreOutcome, Partition, ProtocolKind, ReplicaSpec, RunSummary,
    Scenario, Simulation, SubjectConfig, MAIN_LOCK,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ardt-locks", version, about = "Replicated mutual exclusion: simulate, explore, check")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded simulations over an adversarial network.
    Simulate(SimulateArgs),
    /// Exhaustively explore a small instance.
    Explore(ExploreArgs),
    /// Check the lattice laws on random samples.
    CheckLaws(CheckLawsArgs),
    /// Run the exclusive-write log demo and print the converged log.
    Demo(DemoArgs),
}

/// Flags shared by every scenario-driven command. Flags override values
/// from the scenario file; anything unset keeps the file's value or the
/// default.
#[derive(Args, Debug)]
struct ScenarioArgs {
    /// TOML scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// token, voting, excl-token, excl-voting, resource-map-a or resource-map-b.
    #[arg(long)]
    protocol: Option<String>,
    /// Replica count, or a comma separated list of ids.
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    initial_owner: Option<String>,
    /// Size of the voting group, taken from the front of the replica list.
    #[arg(long)]
    voting_members: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    steps: Option<u64>,
    /// Probability that a message is lost.
    #[arg(long)]
    drop: Option<f64>,
    /// Probability that a delivered message stays queued for redelivery.
    #[arg(long)]
    dup: Option<f64>,
    /// Deliver in random order rather than FIFO.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    reorder: Option<bool>,
    /// Steps between full-state exchanges; 0 disables them.
    #[arg(long)]
    anti_entropy: Option<u64>,
    /// START-END:ID,ID,... separates the listed replicas from the rest; repeatable.
    #[arg(long)]
    partition: Vec<String>,
    /// Extra upkeep at every replica every this many steps.
    #[arg(long)]
    upkeep_every: Option<u64>,
    /// Write the event trace to this file (single run only).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of runs, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Worker threads for multiple runs.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Requests plus releases per replica, alternating.
    #[arg(long, default_value_t = 4)]
    ops: u32,
    #[arg(long, default_value_t = 6)]
    max_in_flight: usize,
    #[arg(long, default_value_t = 6)]
    max_deliveries: u32,
    /// Skip operations that would move a lock past this epoch.
    #[arg(long)]
    max_epoch: Option<u64>,
    #[arg(long, default_value_t = 500_000)]
    max_states: usize,
    /// Only check that no two replicas own a lock at once.
    #[arg(long)]
    owners_only: bool,
    #[arg(long, hide = true)]
    inject_bug: bool,
}

#[derive(Args, Debug)]
struct CheckLawsArgs {
    /// ownership, token, epoch, dotset, voting or excl; all when omitted.
    #[arg(long = "type")]
    ty: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DemoLock {
    Token,
    Voting,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long, value_enum, default_value_t = DemoLock::Token)]
    lock: DemoLock,
    #[arg(long, default_value_t = 4)]
    replicas: usize,
    #[arg(long, default_value_t = 400)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    drop: f64,
    #[arg(long, default_value_t = 10)]
    anti_entropy: u64,
}

/// Parses `std::env::args` and runs the command, returning the exit status.
pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Runs the command line `args`, whose first item is the program name.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Explore(a) => explore(a),
        Command::CheckLaws(a) => check_laws(a),
        Command::Demo(a) => demo(a),
    };
    result.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        EXIT_USAGE
    })
}

type CliResult = Result<i32, String>;

fn load(args: &ScenarioArgs) -> Result<Scenario, String> {
    let mut s = match &args.scenario {
        Some(path) => Scenario::load(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => Scenario::default(),
    };
    if let Some(p) = &args.protocol {
        s.protocol = ProtocolKind::parse(p).map_err(|e| e.to_string())?;
    }
    if let Some(r) = &args.replicas {
        s.replicas = match r.parse::<usize>() {
            Ok(n) => ReplicaSpec::Count(n),
            Err(_) => ReplicaSpec::Ids(r.split(',').map(|x| x.trim().to_owned()).collect()),
        };
    }
    if let Some(o) = &args.initial_owner {
        s.initial_owner = Some(o.clone());
    }
    if let Some(n) = args.voting_members {
        s.voting_members = Some(n);
    }
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn simulate(a: SimulateArgs) -> CliResult {
    let mut s = load(&a.scenario)?;
    if let Some(v) = a.steps {
        s.steps = v;
    }
    if let Some(v) = a.drop {
        s.network.drop = v;
    }
    if let Some(v) = a.dup {
        s.network.duplicate = v;
    }
    if let Some(v) = a.reorder {
        s.network.reorder = v;
    }
    if let Some(v) = a.anti_entropy {
        s.network.anti_entropy = v;
    }
    if !a.partition.is_empty() {
        s.network.partitions = a
            .partition
            .iter()
            .map(|p| Partition::parse(p))
            .collect::<crate::Result<_>>()
            .map_err(|e| e.to_string())?;
    }
    if let Some(v) = a.upkeep_every {
        s.upkeep_every = v;
    }
    s.validate().map_err(|e| e.to_string())?;

    if a.runs > 1 {
        if a.out.is_some() {
            return Err("--out needs a single run".into());
        }
        let jobs = a
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let summaries = sim::run_many(&s, a.runs, jobs).map_err(|e| e.to_string())?;
        print!("{}", aggregate(&s, &summaries));
        let failed = summaries.iter().any(|r| r.violation.is_some());
        return Ok(if failed { EXIT_VIOLATION } else { EXIT_OK });
    }

    let outcome = sim::run_scenario(&s, a.out.is_some()).map_err(|e| e.to_string())?;
    if let Some(path) = &a.out {
        std::fs::write(path, outcome.trace.render()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
    } else {
        print!("{}", summary_text(&outcome.summary));
    }
    match &outcome.violation {
        Some(v) => {
            eprintln!("violation: {v}");
            eprintln!("world: {}", v.world);
            Ok(EXIT_VIOLATION)
        }
        None => Ok(EXIT_OK),
    }
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}

/// The plain-text run summary printed by `simulate`.
pub fn summary_text(r: &RunSummary) -> String {
    let mut out = String::new();
    let acq: Vec<String> = r.acquisitions.iter().map(|(id, n)| format!("{id}={n}")).collect();
    let m = &r.messages;
    let _ = writeln!(out, "protocol: {}", r.protocol);
    let _ = writeln!(out, "seed: {}", r.seed);
    let _ = writeln!(out, "steps: {}", r.steps);
    let _ = writeln!(out, "acquisitions: {}", acq.join(" "));
    let _ = writeln!(out, "owner_changes: {}", r.owner_changes);
    let _ = writeln!(out, "unsatisfied: {}", list(&r.unsatisfied));
    let _ = writeln!(
        out,
        "messages: sent={} delivered={} stale={} dropped={} duplicated={}",
        m.sent, m.delivered, m.stale, m.dropped, m.duplicated
    );
    let _ = writeln!(out, "converged: {}", r.converged);
    let _ = writeln!(out, "violation: {}", r.violation.as_deref().unwrap_or("none"));
    out
}

fn aggregate(s: &Scenario, runs: &[RunSummary]) -> String {
    let mut out = String::new();
    let violations: Vec<&RunSummary> = runs.iter().filter(|r| r.violation.is_some()).collect();
    let diverged = runs.iter().filter(|r| !r.converged).count();
    let acq: Vec<String> = sim::total_acquisitions(runs)
        .into_iter()
        .map(|(id, n)| format!("{id}={n}"))
        .collect();
    let _ = writeln!(out, "protocol: {}", s.protocol.name());
    let _ = writeln!(out, "runs: {} (seeds {}..={})", runs.len(), s.seed, s.seed + runs.len() as u64 - 1);
    let _ = writeln!(out, "acquisitions: {}", acq.join(" "));
    let _ = writeln!(out, "not_converged: {diverged}");
    let _ = writeln!(out, "violations: {}", violations.len());
    if let Some(first) = violations.first() {
        let _ = writeln!(
            out,
            "first_violation: seed {}: {}",
            first.seed,
            first.violation.as_deref().unwrap_or_default()
        );
    }
    out
}

fn explore(a: ExploreArgs) -> CliResult {
    let mut s = load(&a.scenario)?;
    if a.inject_bug {
        if s.protocol != ProtocolKind::Token {
            return Err("--inject-bug applies to the token protocol".into());
        }
        s.protocol = ProtocolKind::TokenNoEpochBump;
    }
    let bounds = ExploreBounds {
        ops_per_replica: a.ops,
        max_in_flight: a.max_in_flight,
        max_deliveries: a.max_deliveries,
        max_epoch: a.max_epoch,
        max_states: a.max_states,
    };
    let checks = if a.owners_only { Checks::SingleOwner } else { Checks::All };
    let report = sim::explore_scenario(&s, bounds, checks).map_err(|e| e.to_string())?;
    println!("protocol: {}", s.protocol.name());
    println!("{report}");
    Ok(match report.outcome {
        ExploreOutcome::Verified => EXIT_OK,
        ExploreOutcome::Counterexample { .. } => EXIT_VIOLATION,
        ExploreOutcome::BudgetExhausted => EXIT_BUDGET,
    })
}

fn check_laws(a: CheckLawsArgs) -> CliResult {
    let types = match &a.ty {
        Some(t) => vec![t.parse::<LatticeType>().map_err(|_| {
            let known: Vec<&str> = LatticeType::ALL.iter().map(|t| t.name()).collect();
            format!("unknown type {t:?}; expected one of {}", known.join(", "))
        })?],
        None => LatticeType::ALL.to_vec(),
    };
    let mut status = EXIT_OK;
    for t in types {
        match t.check(a.samples, a.seed) {
            Ok(r) => println!(
                "{t}: ok ({} idempotence, {} commutativity, {} associativity)",
                r.idempotence, r.commutativity, r.associativity
            ),
            Err(e) => {
                println!("{t}: FAILED {e}");
                status = EXIT_VIOLATION;
            }
        }
    }
    Ok(status)
}

fn demo(a: DemoArgs) -> CliResult {
    let mut s = Scenario {
        protocol: match a.lock {
            DemoLock::Token => ProtocolKind::ExclToken,
            DemoLock::Voting => ProtocolKind::ExclVoting,
        },
        replicas: ReplicaSpec::Count(a.replicas),
        steps: a.steps,
        seed: a.seed,
        ..Scenario::default()
    };
    s.network.drop = a.drop;
    s.network.reorder = true;
    s.network.anti_entropy = a.anti_entropy;
    s.validate().map_err(|e| e.to_string())?;
    let ids = s.replica_ids().map_err(|e| e.to_string())?;

    let (outcome, log) = match a.lock {
        DemoLock::Token => {
            let sim = Simulation::<Excl<Token, EpochLog>>::new(&s, SubjectConfig::single(()), false)
                .map_err(|e| e.to_string())?;
            let (outcome, world) = sim.finish();
            (outcome, world.replicas[0].state.value.clone())
        }
        DemoLock::Voting => {
            let members = Membership::new(s.member_ids(&ids).map_err(|e| e.to_string())?);
            let sim = Simulation::<Excl<Voting, EpochLog>>::new(&s, SubjectConfig::single(members), false)
                .map_err(|e| e.to_string())?;
            let (outcome, world) = sim.finish();
            (outcome, world.replicas[0].state.value.clone())
        }
    };
    println!(
        "{} lock on {MAIN_LOCK}, {} replicas, {} steps, seed {}",
        s.protocol.name(),
        ids.len(),
        s.steps,
        s.seed
    );
    println!("epoch  writer");
    for e in &log.entries {
        println!("{:>5}  {}", e.epoch, e.writer);
    }
    let conflicts = log.conflicting_epochs();
    println!("entries: {}", log.entries.len());
    println!(
        "epochs with several writers: {}",
        if conflicts.is_empty() {
            "none".to_owned()
        } else {
            format!("{conflicts:?}")
        }
    );
    println!("converged: {}", outcome.summary.converged);
    let ok = outcome.violation.is_none() && conflicts.is_empty() && outcome.summary.converged;
    if let Some(v) = &outcome.violation {
        eprintln!("violation: {v}");
    }
    Ok(if ok { EXIT_OK } else { EXIT_VIOLATION })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn status(args: &[&str]) -> i32 {
        run(std::iter::once("ardt-locks").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(status(&["simulate", "--protocol", "paxos"]), EXIT_USAGE);
        assert_eq!(status(&["simulate", "--bogus"]), EXIT_USAGE);
        assert_eq!(status(&["check-laws", "--type", "nope"]), EXIT_USAGE);
        assert_eq!(status(&["simulate", "--drop", "1.5"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(status(&["--help"]), EXIT_OK);
    }

    #[test]
    fn scenario_flags_override_defaults() {
        let args = ScenarioArgs {
            scenario: None,
            protocol: Some("voting".into()),
            replicas: Some("a,b,c".into()),
            initial_owner: None,
            voting_members: Some(2),
            seed: Some(9),
        };
        let s = load(&args).unwrap();
        assert_eq!(s.protocol, ProtocolKind::Voting);
        assert_eq!(s.replicas, ReplicaSpec::Ids(vec!["a".into(), "b".into(), "c".into()]));
        assert_eq!(s.voting_members, Some(2));
        assert_eq!(s.seed, 9);
    }
}
