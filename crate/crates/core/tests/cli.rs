use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ardt-locks"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_reports_a_summary() {
    let o = cli(&["simulate", "--protocol", "token", "--replicas", "3", "--steps", "200", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for key in ["acquisitions: r1=", "owner_changes: ", "converged: true", "violation: none"] {
        assert!(out.contains(key), "{out}");
    }
}

#[test]
fn invalid_protocol_exits_two() {
    let o = cli(&["simulate", "--protocol", "paxos"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("paxos"));
}

#[test]
fn unknown_flag_and_bad_scenario_exit_two() {
    assert_eq!(cli(&["simulate", "--frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "protocol = \"token\"\nstepz = 4\n").unwrap();
    assert_eq!(cli(&["simulate", "--scenario", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(cli(&["simulate", "--scenario", "/nonexistent.toml"]).status.code(), Some(2));
}

#[test]
fn identical_invocations_write_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let o = cli(&[
            "simulate", "--protocol", "voting", "--replicas", "4", "--seed", "3", "--drop", "0.2", "--dup", "0.1",
            "--reorder", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    let a = run("a.jsonl");
    assert!(!a.is_empty());
    assert_eq!(a, run("b.jsonl"));
    let first = String::from_utf8(a).unwrap();
    let line = first.lines().next().unwrap();
    let keys: Vec<String> = serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(line)
        .unwrap()
        .keys()
        .cloned()
        .collect();
    assert!(line.starts_with("{\"step\":"), "{line}");
    assert_eq!(keys.len(), 5);
    assert!(line.contains(",\"seq\":0,\"kind\":\"op-invoked\",\"replica\":"), "{line}");
}

#[test]
fn flags_override_the_scenario_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/token-lossy.toml");
    let o = cli(&["simulate", "--scenario", path, "--replicas", "2", "--steps", "30", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["steps"], 30);
    assert_eq!(summary["acquisitions"].as_object().unwrap().len(), 2);
}

#[test]
fn many_runs_are_aggregated() {
    let o = cli(&["simulate", "--protocol", "excl-voting", "--runs", "20", "--jobs", "2", "--drop", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("runs: 20 (seeds 0..=19)"), "{out}");
    assert!(out.contains("violations: 0"), "{out}");
}

#[test]
fn explore_token_reports_states() {
    let o = cli(&["explore", "--protocol", "token", "--replicas", "2", "--ops", "2", "--max-in-flight", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("result: verified"), "{out}");
    let states: usize = out
        .lines()
        .find_map(|l| l.strip_prefix("states: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(states > 0);
}

#[test]
fn explore_voting_three_members() {
    let o = cli(&["explore", "--protocol", "voting", "--replicas", "3", "--ops", "2", "--max-epoch", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn injected_bug_exits_one_with_a_path() {
    let o = cli(&["explore", "--protocol", "token", "--replicas", "2", "--initial-owner", "r2", "--inject-bug"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("path:\n  1. r1 request lock"), "{out}");
}

#[test]
fn exhausted_budget_exits_three() {
    let o = cli(&["explore", "--replicas", "2", "--max-states", "50"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("budget exhausted"));
}

#[test]
fn check_laws_exit_codes() {
    assert_eq!(cli(&["check-laws", "--type", "dotset", "--samples", "10000"]).status.code(), Some(0));
    assert_eq!(cli(&["check-laws", "--type", "token"]).status.code(), Some(0));
    assert_eq!(cli(&["check-laws", "--type", "bogus"]).status.code(), Some(2));
}

#[test]
fn demo_prints_one_writer_per_epoch() {
    for lock in ["token", "voting"] {
        let o = cli(&["demo", "--lock", lock, "--seed", "4"]);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.contains("epochs with several writers: none"), "{out}");
        assert!(out.contains("converged: true"), "{out}");
    }
}
