use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn nlfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlfp")).args(args).output().expect("binary runs")
}

fn edited(name: &str, dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(scenario(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn linear_benchmark_passes_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lin");
    let o = nlfp(&["run", scenario("linear_1d.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["pass"], true);
    assert!(check(&r, "mass_drift_relative")["value"].as_f64().unwrap() <= 1e-8);
    for f in ["ledger.csv", "initial.json", "initial.bin", "trajectory/manifest.json", "trajectory/state_00500.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("ledger.csv")).unwrap().lines().count(), 502);
}

#[test]
fn step_above_lambda0_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edited("nonlinear_1d.json", tmp.path(), |v| {
        v["run"]["step"] = 1.0.into();
        v["run"]["horizon"] = 2.0.into();
    });
    let o = nlfp(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("run.step") && err.contains("lambda0 = (|(div D)^- + |D||_inf^(1/2) |b|_inf)^(-1)"), "{err}");
    assert!(!tmp.path().join("o/report.json").exists());
}

#[test]
fn check_spec_reports_without_solving() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("spec");
    let o = nlfp(&["check-spec", scenario("bernstein_fractional.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let entries: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec!["report.json"]);
    assert_eq!(report(&out)["hypotheses"]["sublinear_pass"], true);

    // a bounded Ψ cannot satisfy a power lower bound
    let o = nlfp(&["check-spec", scenario("bernstein_atomic.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed["hypotheses"]["lower_bound_pass"], false);
}

#[test]
fn same_seed_gives_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edited("nonlinear_1d.json", tmp.path(), |v| {
        v["run"]["particles"] = 5000.into();
        v["verify"] = serde_json::json!({ "particle_marginals": false });
    });
    let run = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let o = nlfp(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9", "--threads", threads]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("report.json")).unwrap()
    };
    assert_eq!(run("a", "1"), run("b", "3"));
    assert!(tmp.path().join("a/metrics.csv").exists());
    assert!(tmp.path().join("a/particles/checkpoint.json").exists());
}

#[test]
fn config_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edited("linear_1d.json", tmp.path(), |v| v["grid"]["n"] = "many".into());
    let o = nlfp(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at `grid"), "{}", stderr(&o));

    let cfg = edited("linear_1d.json", tmp.path(), |v| v["run"]["stpe"] = 0.1.into());
    let o = nlfp(&["run", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("at `run.stpe`"), "{}", stderr(&o));

    let cfg = edited("linear_1d.json", tmp.path(), |v| v["version"] = 7.into());
    let o = nlfp(&["run", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("at `version`"), "{}", stderr(&o));
}

#[test]
fn hypothesis_failure_needs_the_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edited("linear_1d.json", tmp.path(), |v| {
        v["bernstein"]["measure"]["s"] = 0.4.into();
        v["bernstein"]["s_lower"] = 0.4.into();
        v["run"]["horizon"] = 0.01.into();
        v["verify"] = serde_json::json!({});
    });
    let out = tmp.path().join("o");
    let o = nlfp(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--allow-hypothesis-fail"));
    let o = nlfp(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--allow-hypothesis-fail"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(report(&out)["hypotheses"]["s_lower_in_range"], false);
}

#[test]
fn resolvent_and_convergence_pipelines() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("res");
    let o = nlfp(&["resolvent-test", scenario("nonlinear_1d.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("resolvent.json").exists());
    assert_eq!(report(&out)["command"], "resolvent-test");

    let cfg = edited("linear_1d.json", tmp.path(), |v| {
        v["run"]["horizon"] = 0.4.into();
        v["run"]["refinement"] = serde_json::json!([0.04, 0.02, 0.01]);
    });
    let out = tmp.path().join("conv");
    let o = nlfp(&["convergence", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(check(&report(&out), "order_vs_exact")["value"].as_f64().unwrap() >= 0.8);
    assert_eq!(fs::read_to_string(out.join("convergence.csv")).unwrap().lines().count(), 3);
}

#[test]
fn particle_only_emits_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edited("nonlinear_1d.json", tmp.path(), |v| v["run"]["particles"] = 20000.into());
    let out = tmp.path().join("p");
    let o = nlfp(&["particle-only", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 52);
    assert!(report(&out)["details"]["particle_control"]["budget"].as_f64().unwrap() > 0.0);
}
