use std::path::PathBuf;
use std::process::{Command, Output};

fn rumor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumor")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = rumor(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn words(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn documented_examples() {
    assert_eq!(stdout(&["exact", "all-suspects", "--delta", "3", "--n", "4"]), "0.4\n");
    assert_eq!(stdout(&["asymptotic", "phi1", "--delta", "3"]), "0.25\n");
    assert_eq!(stdout(&["asymptotic", "phi3", "--delta", "3"]), "0.75\n");
    assert_eq!(stdout(&words("exact connected --delta 3 --k 2 --n 4")), "0.8\n");
    assert_eq!(stdout(&words("exact two --delta 2 --d 1 --n 2")), "0.75\n");
}

#[test]
fn exact_json_carries_rational() {
    let text = stdout(&words("--format json exact all-suspects --delta 3 --n 4"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["rational"], "2/5");
    assert_eq!(v["method"], "closed-form");
    let text = stdout(&words("--format json exact all-suspects --delta 5 --n 30 --arith float"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["rational"].is_null());
}

#[test]
fn experiment_two_at_one() {
    let args = words("--format json experiment --scenario two-at-d --delta 3 --d 1 --n 500 --trials 2000 --seed 7");
    let text = stdout(&args);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let (lo, hi) = (v["ci_low"].as_f64().unwrap(), v["ci_high"].as_f64().unwrap());
    assert!(lo <= 0.75 && 0.75 <= hi, "CI [{lo}, {hi}]");
    assert_eq!(text, stdout(&args), "reports are byte-identical");
}

#[test]
fn experiment_csv_header() {
    let text =
        stdout(&words("--format csv experiment --scenario connected-k --delta 4 --k 5 --n 50 --trials 50 --seed 1"));
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "scenario,delta,n,k,d,trials,seed,empirical_pc,ci_low,ci_high,exact_pc,exact_method,asymptotic_pc"
    );
}

#[test]
fn simulate_estimate_centrality_round_trip() {
    let snap = scratch("snap.json");
    let text = stdout(&words("--format json simulate --delta 3 --n 12 --seed 9"));
    std::fs::write(&snap, &text).unwrap();
    let p = snap.to_str().unwrap();
    let table = stdout(&["--format", "csv", "centrality", "--snapshot", p]);
    assert_eq!(table.lines().count(), 13);
    let chosen = stdout(&["estimate", "--snapshot", p, "--seed", "4"]);
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&["--format", "json", "estimate", "--snapshot", p, "--seed", "4"])).unwrap();
    assert_eq!(chosen.trim(), v["chosen"].to_string());
}

#[test]
fn figure_writes_files() {
    let dir = scratch("fig");
    let mut args = words("figure fig7 --seed 5 --n 30 --trials 20 --deltas 3,4 --out");
    args.push(dir.to_str().unwrap());
    let out = stdout(&args);
    assert_eq!(out.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(dir.join("fig7.csv")).unwrap(), out);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fig7.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["n"], 30);
    assert_eq!(meta["default_scale"], false);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| rumor(args).status.code().unwrap();
    // Missing --seed on a randomized command.
    assert_eq!(code(&["simulate", "--delta", "3", "--n", "5"]), 2);
    assert_eq!(code(&["exact", "all-suspects", "--delta", "1", "--n", "4"]), 2);
    assert_eq!(code(&["figure", "fig11", "--seed", "1"]), 2);
    assert_eq!(code(&words("experiment --scenario two-at-d --delta 3 --k 2 --n 5 --trials 1 --seed 1")), 2);

    let edges = scratch("path.txt");
    std::fs::write(&edges, "0 1\n1 2\n").unwrap();
    let e = edges.to_str().unwrap();
    assert_eq!(code(&["simulate", "--graph", e, "--n", "5", "--seed", "1"]), 3);

    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"n": 3, "nodes": [0, 1, 2], "edges": [[0, 1], [1, 2], [2, 0]]}"#).unwrap();
    assert_eq!(code(&["centrality", "--snapshot", bad.to_str().unwrap()]), 4);
}
