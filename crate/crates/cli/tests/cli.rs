use std::collections::BTreeMap;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mabinogion")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_records(text: &str) -> Vec<BTreeMap<String, String>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().map(|r| r.unwrap()).collect()
}

fn json_records(text: &str) -> Vec<BTreeMap<String, String>> {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    serde_json::from_value(v["rows"].clone()).unwrap()
}

fn exact_value(args: &[&str]) -> String {
    csv_records(&stdout(args))[0]["value"].clone()
}

#[test]
fn exact_examples() {
    assert_eq!(exact_value(&["exact", "--process", "m", "-w", "1", "-b", "2", "--quantity", "time"]), "3/2");
    assert_eq!(exact_value(&["exact", "--process", "a", "-w", "2", "-b", "2", "--quantity", "final-black"]), "7/3");
    assert_eq!(
        exact_value(&["exact", "--process", "conditional", "-w", "1", "-b", "2", "--quantity", "time"]),
        "5/4"
    );
    assert_eq!(exact_value(&["exact", "-w", "1", "-b", "2", "--quantity", "absorb-prob"]), "3/4");
    assert_eq!(exact_value(&["exact", "--process", "a", "-w", "3", "-b", "3", "--quantity", "time"]), "25/11");
    assert_eq!(exact_value(&["exact", "--process", "R", "-w", "3", "-b", "4", "--quantity", "final-black"]), "4/1");
    // the DP and the closed form agree through the CLI
    assert_eq!(
        exact_value(&["exact", "--process", "q:1/2", "-w", "3", "-b", "3", "--quantity", "time"]),
        "25/11"
    );
    assert_eq!(
        exact_value(&["exact", "--process", "a", "-w", "2", "-b", "2", "--quantity", "discounted:0"]),
        "7/3"
    );
}

#[test]
fn positive_discount_has_decimal_only() {
    let rec = &csv_records(&stdout(&["exact", "--process", "a", "-w", "2", "-b", "2", "--quantity", "discounted:1/10"]))[0];
    assert_eq!(rec["value"], "");
    let v: f64 = rec["decimal"].parse().unwrap();
    assert!(v > 0.0 && v < 7.0 / 3.0);
}

#[test]
fn rationals_accepted_for_counts() {
    assert_eq!(exact_value(&["exact", "-w", "2/2", "-b", "4/2", "--quantity", "time"]), "3/2");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["exact", "--process", "a", "-w", "1", "-b", "2", "--quantity", "absorb-prob"],
        vec!["exact", "--process", "conditional", "-w", "1", "-b", "2", "--quantity", "final-black"],
        vec!["exact", "-w", "1/2", "-b", "2"],
        vec!["exact", "-w", "0", "-b", "0"],
        vec!["simulate", "--runs", "10"],
        vec!["simulate", "-w", "1", "-b", "1", "--strategy", "A", "--conditional"],
        vec!["nonsense"],
        vec!["exact", "-w", "1", "-b", "1", "--threads", "0"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn csv_and_json_match() {
    for args in [
        vec!["simulate", "-w", "20", "-b", "20", "--strategy", "A", "--runs", "300", "--seed", "3", "--mu", "1/50"],
        vec!["audit", "--quantity", "t-a", "--k-max", "20"],
        vec!["exact", "--process", "a", "-w", "4", "-b", "9", "--quantity", "time"],
        vec!["scan-q", "-w", "6", "-b", "6", "--q", "1/2,2/3", "--mu", "0:0.02:2", "--runs", "200"],
    ] {
        let csv_text = stdout(&args);
        let mut json_args = args.clone();
        json_args.extend(["--format", "json"]);
        let json_text = stdout(&json_args);
        assert_eq!(csv_records(&csv_text), json_records(&json_text), "{args:?}");
    }
}

#[test]
fn simulation_is_reproducible() {
    let args = ["simulate", "-w", "30", "-b", "30", "--strategy", "q:3/5", "--runs", "2000", "--seed", "11"];
    let first = run(&args);
    let threaded = Command::new(env!("CARGO_BIN_EXE_mabinogion"))
        .args(args)
        .env("MAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(first.stdout, threaded.stdout);
    assert_eq!(first.stdout, run(&args).stdout);
}

#[test]
fn simulate_policy_a_matches_table_cell() {
    let rec = &csv_records(&stdout(&["simulate", "-w", "100", "-b", "100", "--strategy", "A", "--runs", "10000", "--seed", "7"]))[0];
    let mean: f64 = rec["mean_h"].parse().unwrap();
    let se: f64 = rec["stderr_h"].parse().unwrap();
    // published simulated value for N = 200, x = 0.5, both sampling errors allowed
    assert!((mean - 296.77).abs() < 4.0 * se * 2f64.sqrt(), "{mean} ± {se}");
}

#[test]
fn scan_grid_shape() {
    let text = stdout(&["simulate", "-w", "5", "-b", "5", "--scan-q", "0.5:1.0:5", "--mu", "0:0.02:4", "--runs", "50"]);
    let recs = csv_records(&text);
    assert_eq!(recs.len(), 20);
    assert_eq!(recs[0]["strategy"], "q:1/2");
    assert_eq!(recs[19]["strategy"], "q:9/10");
    assert_eq!(recs[3]["mu"], "3/200");
}

#[test]
fn table1_shape() {
    let text = stdout(&["table1", "--runs", "20", "--totals", "20,40", "--fractions", "1/2,3/4"]);
    let recs = csv_records(&text);
    assert_eq!(recs.len(), 4);
    assert_eq!((recs[1]["white"].as_str(), recs[1]["black"].as_str()), ("5", "15"));
}

#[test]
fn verify_passes() {
    let text = stdout(&["verify", "--identities", "--max-n", "200"]);
    assert!(csv_records(&text).iter().all(|r| r["status"] == "pass"));
    let text = stdout(&["verify", "--oracle", "--max-total", "16"]);
    assert!(csv_records(&text).iter().all(|r| r["status"] == "pass"));
    let text = stdout(&["verify", "--asymptotics", "--k-max", "200"]);
    assert!(csv_records(&text).iter().all(|r| r["status"] == "pass"));
}

#[test]
fn verify_failure_exits_one() {
    // the time approximation misses the 0.1 bound at k = 1
    let out = run(&["verify", "--asymptotics", "--k-min", "1", "--k-max", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let recs = csv_records(&String::from_utf8(out.stdout).unwrap());
    let t_abs = recs.iter().find(|r| r["check"] == "bound-t-a-abs").unwrap();
    assert_eq!(t_abs["status"], "fail");
    assert!(t_abs["detail"].contains("k=1"));
}

#[test]
fn paths_output() {
    let recs = csv_records(&stdout(&["paths", "-w", "10", "-b", "10", "--n-paths", "3", "--seed", "1"]));
    let last_of = |p: &str| recs.iter().rfind(|r| r["path"] == p).unwrap()["black"].clone();
    for p in ["0", "1", "2"] {
        assert!(["0", "20"].contains(&last_of(p).as_str()));
    }
    let recs = csv_records(&stdout(&["paths", "-w", "10", "-b", "10", "--n-paths", "3", "--conditional"]));
    assert_eq!(recs.last().unwrap()["black"], "20");
}

#[test]
fn oracle_matches_exact() {
    let v = exact_value(&["oracle", "-w", "3", "-b", "3", "--strategy", "A", "--quantity", "time"]);
    assert_eq!(v, "25/11");
    let v = exact_value(&["oracle", "-w", "1", "-b", "2", "--quantity", "final-black"]);
    assert_eq!(v, "9/4");
}
