use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use svrg_core::data::{parse_libsvm, read_trace, LabelMap};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svrg-bench")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn labels(path: &Path) -> Vec<i32> {
    let ds = parse_libsvm(fs::read(path).unwrap().as_slice(), &LabelMap::Auto).unwrap();
    ds.examples().iter().map(|e| e.label).collect()
}

fn write_lines(path: &Path, n: usize) {
    let text: String = (0..n).map(|i| format!("{} 1:{} 3:0.5\n", if i % 2 == 0 { "+1" } else { "-1" }, i + 1)).collect();
    fs::write(path, text).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn flip_quarter_of_eight_changes_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.libsvm");
    let out = dir.path().join("out.libsvm");
    write_lines(&input, 8);
    let r = bench(&["flip", "--input", s(&input), "--fraction", "0.25", "--seed", "3", "--out", s(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let changed = labels(&input).iter().zip(labels(&out)).filter(|(a, b)| **a != *b).count();
    assert_eq!(changed, 2);
    // Same seed, same output.
    let again = dir.path().join("again.libsvm");
    bench(&["flip", "--input", s(&input), "--fraction", "0.25", "--seed", "3", "--out", s(&again)]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn split_ten_lines_four_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.libsvm");
    let train = dir.path().join("train.libsvm");
    write_lines(&input, 10);
    let r = bench(&["split", "--input", s(&input), "--seed", "1", "--out", s(&train)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let hold = dir.path().join("train.libsvm.holdout");
    assert_eq!(labels(&train).len(), 8);
    assert_eq!(labels(&hold).len(), 2);
    // Every input line lands in exactly one part.
    let mut all: Vec<String> = fs::read_to_string(&train).unwrap().lines().map(String::from).collect();
    all.extend(fs::read_to_string(&hold).unwrap().lines().map(String::from));
    all.sort();
    let mut orig: Vec<String> = fs::read_to_string(&input).unwrap().lines().map(String::from).collect();
    orig.sort();
    assert_eq!(all, orig);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.libsvm");
    fs::write(&input, "+1 1:1\n-1 2:x\n").unwrap();
    let r = bench(&["flip", "--input", s(&input), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 2"));
}

#[test]
fn synth_train_and_trace_header() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.libsvm");
    assert_eq!(code(&bench(&["synth", "--n", "120", "--d", "4", "--seed", "2", "--out", s(&data)])), 0);
    let config = dir.path().join("run.toml");
    fs::write(&config, format!("dataset = {data:?}\noptimizer = \"svrg2\"\nepochs = 4\nlambda = 1e-3\n")).unwrap();
    let trace = dir.path().join("trace.csv");
    let r = bench(&["train", "--config", s(&config), "--seed", "5", "--out", s(&trace)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("final objective") && stdout.contains("passes"));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("# "));
    assert!(text.contains("# seed = 5"), "CLI seed overrides the config: {text}");
    let rows = read_trace(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[0].passes < w[1].passes));
    assert!(rows.iter().all(|r| r.objective.is_finite()));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "optimizer = \"nope\"\n").unwrap();
    assert_eq!(code(&bench(&["train", "--config", s(&config)])), 1);
    fs::write(&config, "lambda = 1.0\n").unwrap();
    assert_eq!(code(&bench(&["train", "--config", s(&config)])), 1, "neither dataset nor synthetic");
}

#[test]
fn huge_step_diverges_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "loss = \"squared\"\noptimizer = \"gd\"\neta = 1e6\nepochs = 50\n[synthetic]\nn = 50\nd = 3\n").unwrap();
    let trace = dir.path().join("t.csv");
    let r = bench(&["train", "--config", s(&config), "--out", s(&trace)]);
    assert_eq!(code(&r), 2, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(read_trace(fs::read(&trace).unwrap().as_slice()).is_ok(), "partial trace is still written");
}

#[test]
fn all_diverged_grid_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tune.toml");
    fs::write(
        &config,
        "loss = \"squared\"\noptimizer = \"svrg1\"\n[synthetic]\nn = 40\nd = 3\n[tune]\nlambdas = [0.0]\nalphas = [1e5, 1e6]\npasses = 5.0\n",
    )
    .unwrap();
    assert_eq!(code(&bench(&["tune", "--config", s(&config)])), 3);
}

#[test]
fn tune_logs_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tune.toml");
    fs::write(
        &config,
        "loss = \"logistic\"\noptimizer = \"sgd\"\n[synthetic]\nn = 60\nd = 3\n[tune]\nlambdas = [1e-4, 1e-2]\nalphas = [0.1, 1.0]\nexponents = [0.0, 0.5]\npasses = 2.0\n",
    )
    .unwrap();
    let log = dir.path().join("log.csv");
    let r = bench(&["tune", "--config", s(&config), "--out", s(&log), "--threads", "2"]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let cells = svrg_bench::tune::read_log(fs::File::open(&log).unwrap()).unwrap();
    assert_eq!(cells.len(), 8);
    assert!(cells.iter().all(|c| c.validation_accuracy.is_some()));
    let (best, _) = svrg_bench::tune::select_best(&cells).unwrap();
    assert!(String::from_utf8_lossy(&r.stdout).contains(&format!("best cell {}:", cells[best].cell)));
}

#[test]
fn verify_passes_and_fault_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let r = bench(&["verify", "--out", s(&report)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert!(json["checks"].as_array().unwrap().iter().all(|c| c["cases"].as_u64().unwrap() > 0));

    let r = bench(&["verify", "--inject-sigmoid-scale", "2"]);
    assert_eq!(code(&r), 4);
    assert!(String::from_utf8_lossy(&r.stderr).contains("loss_smoothness"));
}
