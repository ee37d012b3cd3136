use std::fs;
use std::path::Path;
use std::process::Command;

use probcheck::cli::{main_with_args, SmcSummary};
use probcheck::model_file::parse_mdp;

fn probcheck(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("probcheck").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn gen_writes_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "grid.mdp");
    let (code, _, err) = probcheck(&["gen", "grid:4x4:seed=3", "-o", &file]);
    assert_eq!(code, 0, "{err}");
    let m = parse_mdp(&fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(m.num_states(), 16);

    let (code, stdout, _) = probcheck(&["gen", "candidate"]);
    assert_eq!(code, 0);
    assert_eq!(parse_mdp(&stdout).unwrap().num_states(), 2);
}

#[test]
fn mc_then_smc_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = path(dir.path(), "strategy.json");
    let (code, stdout, err) = probcheck(&["mc", "--bench", "candidate", "--formula", "F[0,3) q", "-o", &strategy]);
    assert_eq!(code, 0, "{err}");
    let value: f64 = stdout.trim().parse().unwrap();
    assert!((value - 0.75).abs() < 1e-12);

    let smc = |extra: &[&str]| {
        let mut args = vec!["smc", "--bench", "candidate", "--formula", "F[0,3) q", "--strategy", &strategy];
        args.extend_from_slice(extra);
        let (code, stdout, err) = probcheck(&args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str::<SmcSummary>(stdout.trim()).unwrap()
    };
    let chernoff = smc(&["--epsilon", "0.05", "--delta", "0.05"]);
    assert_eq!(chernoff.n, 738);
    assert!(!chernoff.n_overridden);
    assert!((chernoff.estimate - 0.75).abs() < 0.05);
    let fixed = smc(&["--N", "100", "--seed", "4"]);
    assert_eq!(fixed.n, 100);
    assert!(fixed.n_overridden);
    // same seed, same answer
    assert_eq!(fixed, smc(&["--N", "100", "--seed", "4"]));
}

#[test]
fn run_writes_report_curve_and_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "out.json");
    let events = path(dir.path(), "events.jsonl");
    let config = path(dir.path(), "run.cfg");
    fs::write(&config, "# small run\nbudget = 1000000\nN = 2000\nconv_rounds=2\n").unwrap();
    let (code, stdout, err) = probcheck(&[
        "run", "--bench", "candidate", "--formula", "F[0,3) q", "--config", &config, "--budget", "150000",
        "--seed", "2", "--out", &report, "--events", &events,
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("termination="), "{stdout}");

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["system"], "bench:candidate");
    // the flag wins over the file, the file over the default
    assert_eq!(json["config"]["budget"], 150000);
    assert_eq!(json["config"]["n"], 2000);
    assert_eq!(json["config"]["conv_rounds"], 2);
    assert!(json["steps_taken"].as_u64().unwrap() <= 150000 + 1000);

    let curve = fs::read_to_string(dir.path().join("out.curve.csv")).unwrap();
    assert!(curve.starts_with("steps,best_estimate\n"));
    assert!(curve.lines().count() >= 2);
    let hyp = fs::read_to_string(dir.path().join("out.hypothesis.mdp")).unwrap();
    parse_mdp(&hyp).unwrap();
    let log = fs::read_to_string(&events).unwrap();
    let last: serde_json::Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(last["event"], "done");
}

#[test]
fn trials_get_distinct_seeds_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "r.json");
    let (code, stdout, err) = probcheck(&[
        "run", "--bench", "candidate", "--formula", "F[0,3) q", "--budget", "60000", "--trials", "2",
        "--seed", "10", "--out", &report,
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("trial ")).count(), 2);
    for (i, seed) in [(0, 10), (1, 11)] {
        let text = fs::read_to_string(dir.path().join(format!("r-{i}.json"))).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["config"]["seed"], seed);
        assert!(dir.path().join(format!("r-{i}.curve.csv")).exists());
    }
}

#[test]
fn model_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let model = path(dir.path(), "m.mdp");
    assert_eq!(probcheck(&["gen", "crash:0.2", "-o", &model]).0, 0);
    let (code, stdout, err) = probcheck(&["mc", "--model", &model, "--formula", "F[0,3) crash"]);
    assert_eq!(code, 0, "{err}");
    let v: f64 = stdout.trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&v));
}

#[test]
fn exit_codes() {
    // outside the supported fragment
    let (code, _, err) = probcheck(&["run", "--bench", "candidate", "--formula", "X q"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("unsupported"), "{err}");
    assert_eq!(probcheck(&["mc", "--bench", "candidate", "--formula", "q U (p U q)"]).0, 2);
    // usage errors
    assert_eq!(probcheck(&["run", "--formula", "q"]).0, 1);
    assert_eq!(probcheck(&["run", "--bench", "candidate", "--model", "x", "--formula", "q"]).0, 1);
    assert_eq!(probcheck(&["frobnicate"]).0, 1);
    // parse and I/O errors
    assert_eq!(probcheck(&["mc", "--bench", "candidate", "--formula", "F[3,1) q"]).0, 1);
    assert_eq!(probcheck(&["mc", "--model", "/nonexistent/m.mdp", "--formula", "q"]).0, 1);
    assert_eq!(probcheck(&["gen", "grid:0x4:seed=1"]).0, 1);
    // help and version
    let (code, stdout, _) = probcheck(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("run"));
    assert_eq!(probcheck(&["--version"]).0, 0);
}

#[test]
fn real_binary_reports_its_exit_status() {
    let bin = env!("CARGO_BIN_EXE_probcheck");
    let ok = Command::new(bin).args(["gen", "candidate"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("mdp"));
    let unsupported = Command::new(bin)
        .args(["mc", "--bench", "candidate", "--formula", "X q"])
        .output()
        .unwrap();
    assert_eq!(unsupported.status.code(), Some(2));
}

#[test]
fn gen_examples() {
    let dir = tempfile::tempdir().unwrap();
    let big = path(dir.path(), "g.mdp");
    assert_eq!(probcheck(&["gen", "grid:14x14:seed=3", "-o", &big]).0, 0);
    let text = fs::read_to_string(&big).unwrap();
    assert_eq!(parse_mdp(&text).unwrap().num_states(), 196);
    // repeated invocation writes the same bytes
    assert_eq!(probcheck(&["gen", "grid:14x14:seed=3", "-o", &big]).0, 0);
    assert_eq!(fs::read_to_string(&big).unwrap(), text);

    let (_, slot, _) = probcheck(&["gen", "slot:limited"]);
    let m = parse_mdp(&slot).unwrap();
    let labels: Vec<&str> = m.alphabet().outputs.iter().map(|o| o.name.as_str()).collect();
    assert!(labels.contains(&"bars_none"), "{labels:?}");
    assert!(labels.contains(&"BAR3"));
}

#[test]
fn mc_examples() {
    let value = |formula: &str| -> f64 {
        let (code, stdout, err) = probcheck(&["mc", "--bench", "candidate", "--formula", formula]);
        assert_eq!(code, 0, "{err}");
        stdout.trim().parse().unwrap()
    };
    assert_eq!(value("p"), 1.0);
    assert_eq!(value("F[0,1) p"), 1.0);
    assert_eq!(value("F[0,4) r"), 0.0);
}

#[test]
fn smc_examples() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = path(dir.path(), "s.json");
    assert_eq!(probcheck(&["mc", "--bench", "candidate", "--formula", "F[0,3) q", "-o", &strategy]).0, 0);
    let (code, stdout, err) = probcheck(&["smc", "--bench", "candidate", "--formula", "F[0,3) q", "--strategy", &strategy]);
    assert_eq!(code, 0, "{err}");
    let s: SmcSummary = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(s.n, 26492);
    assert!((s.estimate - 0.75).abs() <= 0.01, "{}", s.estimate);

    // a deterministic system gives exactly 0 or 1
    let crash = path(dir.path(), "crash.json");
    assert_eq!(probcheck(&["mc", "--bench", "crash:1", "--formula", "F[0,2) crash", "-o", &crash]).0, 0);
    let (_, stdout, _) = probcheck(&[
        "smc", "--bench", "crash:1", "--formula", "F[0,2) crash", "--strategy", &crash, "--N", "50",
    ]);
    let s: SmcSummary = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(s.estimate, 1.0);
}

#[test]
fn unsupported_subterm_is_named() {
    let (code, _, err) = probcheck(&["run", "--bench", "candidate", "--formula", "X (p U q)"]);
    assert_eq!(code, 2);
    assert!(err.contains("X"), "{err}");
}
