use std::process::{Command, Output};

use isolab::prooftrace::ProofTrace;
use isolab::select::SelectionJson;
use isolab::structure::FamilyJson;
use isolab::testbed::RateEstimate;
use isolab::witness::WitnessJson;

fn isolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isolab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn identity_file(dir: &tempfile::TempDir) -> String {
    let path = dir.path().join("identity.txt");
    std::fs::write(&path, "# 3x3 identity\n3 3\n1 0 0\n0 1 0\n0 0 1\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn check_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = identity_file(&dir);
    let o = isolab(&["check", &f, "--epsilon", "0.5", "--sigma", "0,1,2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("verdict: true\n"));

    let o = isolab(&["check", "gen:doubling:4", "--epsilon", "0.5", "--sigma", "1,2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], false);
}

#[test]
fn witness_doubling() {
    let o = isolab(&["witness", "gen:doubling:4", "--epsilon", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let w: WitnessJson = serde_json::from_str(&text).unwrap();
    assert!((w.floor - 0.5).abs() <= 1e-9);
    assert!(w.gap <= 1e-9);
    assert_eq!(serde_json::to_string_pretty(&w).unwrap() + "\n", text);
}

#[test]
fn enumerate_round_trip_and_size_cap() {
    let o = isolab(&["enumerate", "gen:doubling:5", "--epsilon", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let fam: FamilyJson = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(fam.maximal_sets.len(), 4);
    assert_eq!(isolab(&["enumerate", "gen:identity:30", "--epsilon", "0.5"]).status.code(), Some(3));
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 2\n1 NaN\n0 1\n").unwrap();
    let o = isolab(&["check", bad.to_str().unwrap(), "--epsilon", "0.5", "--sigma", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    assert_eq!(isolab(&["check", "gen:nope:3", "--epsilon", "0.5", "--sigma", "0"]).status.code(), Some(2));
    assert_eq!(isolab(&["check", "gen:identity:3", "--epsilon", "0.5", "--sigma", "5"]).status.code(), Some(2));
    assert_eq!(isolab(&["select", "gen:identity:3", "--epsilon", "0.5", "--mu", "1,2"]).status.code(), Some(2));
}

#[test]
fn select_methods() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("mu.txt");
    std::fs::write(&weights, "1\n2\n3\n1\n").unwrap();
    let mu = format!("file:{}", weights.display());
    for method in ["exhaustive", "greedy", "pipeline"] {
        let o = isolab(&["select", "gen:doubling:4", "--epsilon", "0.5", "--method", method, "--mu", &mu]);
        assert_eq!(o.status.code(), Some(0), "{method}");
        let s: SelectionJson = serde_json::from_str(&stdout(&o)).unwrap();
        // The heavier of the colliding columns 1 and 2 wins.
        assert_eq!(s.chosen, vec![0, 2, 3], "{method}");
        assert_eq!(s.mu_value, 5.0);
    }
}

#[test]
fn trace_writes_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let o = isolab(&[
        "trace",
        "gen:gaussian_normalized:6:4",
        "--epsilon",
        "0.3",
        "--C",
        "1.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let tr: ProofTrace = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(tr.passed);
    assert!(tr.check("final-eq1").unwrap().pass);
}

#[test]
fn estimate_is_deterministic() {
    let args = [
        "estimate",
        "gen:gaussian_normalized:5",
        "gen:identity:3",
        "--count",
        "3",
        "--seed",
        "9",
        "--epsilon",
        "0.3,0.5",
    ];
    let a = isolab(&args);
    let b = isolab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("ensemble,n,epsilon,C,seed,c_eq2,c_eq4,c_eq6,c_eq9,status\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
    assert!(text.contains("identity,3,0.5,2,9,4,"));

    let mut tsv_args = args.to_vec();
    tsv_args.extend(["--format", "tsv"]);
    let t = isolab(&tsv_args);
    assert_eq!(stdout(&t).lines().count(), 1 + 4);
}

#[test]
fn rate_doubling() {
    let o = isolab(&["rate", "--n", "4", "--epsilon", "0.5", "--trials", "2000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r: RateEstimate = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.exact, Some(0.75));
    assert!((r.estimate - 0.75).abs() <= 3.0 * r.std_error);
}
