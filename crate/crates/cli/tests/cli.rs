//! End-to-end checks of the binary: exit codes, the `error: <category>:`
//! stderr contract, stdout summaries, and flag overrides.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn plutus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plutus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = plutus(&[
        "backtest-smart-beta",
        "--config",
        "/no/such/file.conf",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).starts_with("error: config: "), "stderr: {}", stderr_of(&out));
}

#[test]
fn unknown_config_key_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "data.ticks = t.csv\nmystery_knob = 7\n").unwrap();
    let out = plutus(&[
        "backtest-market-maker",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.starts_with("error: config: "), "stderr: {err}");
    assert!(err.contains("mystery_knob") && err.contains("line 2"), "stderr: {err}");
}

#[test]
fn invalid_config_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "market_maker.step = -1\n").unwrap();
    let out = plutus(&[
        "backtest-market-maker",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.starts_with("error: config: ") && err.contains("market_maker.step"),
        "stderr: {err}");
}

#[test]
fn unconfigured_input_is_a_data_error() {
    // Config parses fine but names no tick file at all.
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "market_maker.step = 2.0\n").unwrap();
    let out = plutus(&[
        "backtest-market-maker",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).starts_with("error: data: "), "stderr: {}", stderr_of(&out));
}

#[test]
fn missing_tick_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "data.ticks = gone.csv\n").unwrap();
    let out = plutus(&[
        "backtest-market-maker",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_of(&out);
    assert!(err.starts_with("error: data: ") && err.contains("gone.csv"), "stderr: {err}");
}

#[test]
fn metrics_prints_the_report_and_emits_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let conf = fixtures().join("metrics.conf");
    let out = plutus(&[
        "metrics",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("sharpe = "), "stdout: {text}");
    assert!(text.contains("max_drawdown = "), "stdout: {text}");
    for name in ["metrics.txt", "metrics.csv", "manifest.txt", "started_at.txt"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("tool = plutus"), "manifest: {manifest}");
    assert!(manifest.contains("command = metrics"), "manifest: {manifest}");
    assert!(!manifest.contains("seed = "), "metrics takes no seed: {manifest}");
}

#[test]
fn smart_beta_backtest_produces_the_standard_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let conf = fixtures().join("smart_beta.conf");
    let out = plutus(&[
        "backtest-smart-beta",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("information_ratio = "), "stdout: {}", stdout_of(&out));
    for name in ["nav.csv", "drawdown.csv", "metrics.txt", "manifest.txt"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let nav = fs::read_to_string(out_dir.join("nav.csv")).unwrap();
    assert!(nav.starts_with("date,nav\n"), "nav header: {}", &nav[..20.min(nav.len())]);
}

#[test]
fn market_maker_backtest_reports_no_information_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let conf = fixtures().join("market_maker.conf");
    let out = plutus(&[
        "backtest-market-maker",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("sharpe = "), "stdout: {text}");
    assert!(!text.contains("information_ratio"), "benchmark-free run printed an IR: {text}");
    for name in ["nav.csv", "drawdown.csv", "inventory.csv", "fills.csv", "metrics.txt"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let fills = fs::read_to_string(out_dir.join("fills.csv")).unwrap();
    assert!(fills.starts_with("timestamp,side,price,fee_points,inventory_after\n"));
}

#[test]
fn seed_and_trial_overrides_reach_the_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let conf = fixtures().join("optimize_market_maker.conf");
    let out = plutus(&[
        "optimize-market-maker",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "99",
        "--trials",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let best = fs::read_to_string(out_dir.join("best.txt")).unwrap();
    assert!(best.contains("seed = 99"), "best.txt: {best}");
    assert!(best.contains("n_trials = 7"), "best.txt: {best}");
    let trials = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 8, "header plus seven trials: {trials}");
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 99"), "manifest: {manifest}");
}

#[test]
fn zero_trials_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixtures().join("optimize_market_maker.conf");
    let out = plutus(&[
        "optimize-market-maker",
        "--config",
        conf.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--trials",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).starts_with("error: config: "), "stderr: {}", stderr_of(&out));
}

#[test]
fn check_passes_a_complete_readme() {
    let dir = tempfile::tempdir().unwrap();
    let repo = fixtures().join("readmes/full");
    let report_path = dir.path().join("report.txt");
    let out = plutus(&[
        "check",
        "--repo",
        repo.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("score: 1 (7/7 required sections present)"), "stdout: {text}");
    let report = fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("score = 1"), "report: {report}");
}

#[test]
fn check_fails_an_incomplete_readme_with_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let repo = fixtures().join("readmes/partial");
    let out = plutus(&[
        "check",
        "--repo",
        repo.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("[missing] Trading Hypotheses"), "stdout: {}", stdout_of(&out));
    assert!(stderr_of(&out).starts_with("error: compliance: "), "stderr: {}", stderr_of(&out));
}

#[test]
fn check_scores_zero_when_no_readme_exists() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("bare");
    fs::create_dir(&repo).unwrap();
    fs::write(repo.join("notes.txt"), "no readme here\n").unwrap();
    let out = plutus(&[
        "check",
        "--repo",
        repo.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(5), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("readme: NOT FOUND"), "stdout: {text}");
    assert!(text.contains("score: 0 (0/7 required sections present)"), "stdout: {text}");
}

#[test]
fn check_on_a_missing_repo_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = plutus(&[
        "check",
        "--repo",
        "/no/such/repo",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).starts_with("error: data: "), "stderr: {}", stderr_of(&out));
}

#[test]
fn malformed_ruleset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.csv");
    fs::write(&rules, "name,required\nAbstract,maybe\n").unwrap();
    let repo = fixtures().join("readmes/full");
    let out = plutus(&[
        "check",
        "--repo",
        repo.to_str().unwrap(),
        "--rules",
        rules.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).starts_with("error: config: "), "stderr: {}", stderr_of(&out));
}
