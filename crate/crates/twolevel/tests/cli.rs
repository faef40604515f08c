use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use twolevel::cli::{run, OUTPUT_ENV};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args.iter().copied(), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn invoke_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    invoke(&all)
}

fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect()
}

#[test]
fn rates_prints_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = invoke_in(dir.path(), &["rates", "--n", "100", "--m", "100", "--alpha", "0.5", "--alpha-tilde", "0.5"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().any(|l| l == "rate_g=0.02"), "{out}");
    assert!(out.lines().any(|l| l == "rate_f=0.11"), "{out}");
    assert!(dir.path().join("rates.csv").exists());
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("# twolevel rates "));
    assert!(manifest.contains("## outputs = rates.csv"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(invoke(&["rates", "--bogus", "1"]).0, 2);
    assert_eq!(invoke(&["nonsense"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(invoke_in(dir.path(), &["rates", "--alpha", "-1"]).0, 2);
}

#[test]
fn help_exits_0() {
    let (code, out, _) = invoke(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("study1"));
}

#[test]
fn malformed_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "subject,i,t,y\nA,1,0.1,nan-ish\n").unwrap();
    let (code, _, err) = invoke_in(dir.path(), &["fit", "--data", data.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("bad.csv:2:"), "{err}");
    let (code, _, _) = invoke_in(dir.path(), &["fit", "--data", dir.path().join("missing.csv").to_str().unwrap()]);
    assert_eq!(code, 3);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "alpha = 0.5\nalfa = 1\n").unwrap();
    let (code, _, err) = invoke_in(dir.path(), &["rates", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("alfa"), "{err}");
}

#[test]
fn study1_is_deterministic() {
    let args = [
        "study1", "--alpha", "0.5", "--replicates", "5", "--seed", "7", "--pairs", "20x50,50x20",
    ];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let (code, _, err) = invoke_in(d.path(), &args);
        assert_eq!(code, 0, "{err}");
    }
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.contains_key("study1_summary.csv") && sa.contains_key("study1_n20_m50.csv"));
    assert_eq!(sa, sb);
}

#[test]
fn artifact_header_reloads_as_config() {
    let first = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke_in(
        first.path(),
        &["gradient-map", "--alpha", "0.7", "--alpha-tilde", "1.5", "--budget", "2000", "--per-decade", "3"],
    );
    assert_eq!(code, 0, "{err}");
    let artifact = first.path().join("gradient.csv");
    let second = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke_in(second.path(), &["gradient-map", "--config", artifact.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(fs::read_to_string(&artifact).unwrap(), fs::read_to_string(second.path().join("gradient.csv")).unwrap());
    // Reloading into a different command is rejected.
    let (code, _, _) = invoke_in(second.path(), &["rates", "--config", artifact.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "n = 1\nm = 10\nalpha = 1\n").unwrap();
    let (_, out, _) = invoke_in(dir.path(), &["rates", "--config", cfg.to_str().unwrap(), "--m", "1"]);
    // n = m = 1: rate_g = 1 + 1 = 2
    assert!(out.lines().any(|l| l == "rate_g=2"), "{out}");
}

#[test]
fn output_directory_honours_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    std::env::set_var(OUTPUT_ENV, &target);
    let (code, _, err) = invoke(&["rates"]);
    std::env::remove_var(OUTPUT_ENV);
    assert_eq!(code, 0, "{err}");
    assert!(target.join("manifest.txt").exists());
}

#[test]
fn gradient_csv_marks_n_steeper_at_1_10() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = invoke_in(dir.path(), &["gradient-map", "--alpha", "1", "--alpha-tilde", "1", "--budget", "10", "--per-decade", "0"]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(dir.path().join("gradient.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    let row = lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|r| r[idx("n")] == "1" && r[idx("m")] == "10")
        .expect("row (1,10)");
    assert_eq!(row[idx("steeper_g")], "n");
}

#[test]
fn simulate_then_fit_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) =
        invoke_in(dir.path(), &["simulate", "--mode", "regression", "--n", "64", "--m", "5", "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    let table = dir.path().join("table.csv");
    let fit_dir = dir.path().join("fit");
    let (code, _, err) = invoke_in(&fit_dir, &["fit", "--data", table.to_str().unwrap(), "--estimator", "adaptive-f"]);
    assert_eq!(code, 0, "{err}");
    let thr = fs::read_to_string(fit_dir.join("threshold.csv")).unwrap();
    assert!(thr.lines().any(|l| l.starts_with("f_double_threshold,")), "{thr}");
}
