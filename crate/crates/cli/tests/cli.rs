use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bertrand-lab"));
    c.env_remove("BERTRAND_LAB_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn solve_o2_nash() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin().args(["solve", "--nash", "--out"]).arg(out.path()).arg(configs().join("markets/o2.toml")));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path());
    assert_eq!(r["nash"]["profiles"], serde_json::json!([[0.4, 0.4]]));
    assert!(std::fs::read_to_string(out.path().join("summary.txt")).unwrap().contains("[0.4,0.4]"));
}

#[test]
fn solve_o1_cr_is_lowest_price() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("o1.toml");
    std::fs::write(&cfg, "preset = \"O1\"\n").unwrap();
    let o = run(bin().args(["solve", "--cr", "--isd", "--delta"]).arg(&cfg).env("BERTRAND_LAB_OUT", dir.path().join("out")));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["cr"]["actions"], serde_json::json!([[0.05], [0.05]]));
    assert_eq!(r["isd"]["actions"], serde_json::json!([[0.05], [0.05]]));
    assert!(r["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_counterexample_support_objective_is_zero() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        bin()
            .args(["solve", "--cce", "--objective", "support(a1)", "--out"])
            .arg(out.path())
            .arg(configs().join("markets/counterexample.toml")),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path());
    assert!(r["cce"]["value"].as_f64().unwrap().abs() < 1e-9);
    assert!(r["cce"]["max_violation"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn solve_certify_o2() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin().args(["solve", "--certify", "--out"]).arg(out.path()).arg(configs().join("markets/o2.toml")));
    assert!(o.status.success());
    let r = report(out.path());
    assert_eq!(r["certificates"]["increasing_differences"]["holds"], true);
    assert!(r["certificates"]["potential_deviation"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn solve_budget_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("big.toml");
    std::fs::write(&cfg, "preset = \"O2\"\nplayers = 10\n").unwrap();
    let o = run(bin().args(["solve", "--cr", "--out"]).arg(dir.path()).arg(&cfg));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solve_bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "preset = \"O9\"\n").unwrap();
    assert_eq!(run(bin().args(["solve", "--out"]).arg(dir.path()).arg(&cfg)).status.code(), Some(2));
    assert_eq!(run(bin().args(["solve", "--out"]).arg(dir.path()).arg(dir.path().join("missing.toml"))).status.code(), Some(2));
}

#[test]
fn simulate_smoke_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(bin().args(["simulate", "--out"]).arg(d.path()).arg(configs().join("runs/smoke.toml")));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let history = std::fs::read_to_string(a.path().join("history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert!(lines[0].starts_with("#schema="));
    assert_eq!(lines.len() - 2, 10);
    for f in ["history.csv", "metrics.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_missing_demand_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "agents = [\"TS\", \"TS\"]\nhorizon = 10\n[market]\ncosts = [0.0, 0.0]\n[market.grid]\nlow = 0.0\nhigh = 1.0\npoints = 5\n",
    )
    .unwrap();
    let o = run(bin().args(["simulate", "--out"]).arg(dir.path()).arg(&cfg));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("demand") && err.contains("line"), "{err}");
}

const SMALL: &str = r#"
horizon = 300
seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
curve_points = 5
[[matrix]]
presets = ["O1", "O2", "O3", "O2'", "O3'"]
roster = ["UCB-T", "Exp3", "eGreedy", "TS"]
"#;

#[test]
fn sweep_matrix_rows_and_worker_independence() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.toml");
    std::fs::write(&m, SMALL).unwrap();
    let (one, eight) = (dir.path().join("one"), dir.path().join("eight"));
    for (jobs, out) in [("1", &one), ("8", &eight)] {
        let o = run(bin().args(["sweep", "--jobs", jobs, "--out"]).arg(out).arg(&m));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows = std::fs::read_to_string(one.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count() - 2, 10 * 5 * 10);
    for f in ["rows.csv", "aggregate.csv", "curves.csv"] {
        assert_eq!(std::fs::read(one.join(f)).unwrap(), std::fs::read(eight.join(f)).unwrap(), "{f}");
    }
    let plots: Vec<_> = std::fs::read_dir(one.join("plots")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(plots.iter().any(|p| p == "heatmap_O2p.svg"), "{plots:?}");
    assert!(plots.iter().any(|p| p.starts_with("curve_")), "{plots:?}");
}

#[test]
fn plot_reruns_offline() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.toml");
    std::fs::write(&m, "horizon = 200\nseeds = [0, 1]\n[[sweep]]\nplayers = [2, 3]\nroster = [\"TS\"]\n").unwrap();
    let out = dir.path().join("out");
    assert!(run(bin().args(["sweep", "--no-plots", "--out"]).arg(&out).arg(&m)).status.success());
    assert!(!out.join("plots").exists());
    assert!(run(bin().arg("plot").arg(&out)).status.success());
    assert!(out.join("plots/players_O2.svg").exists());
}

#[test]
fn sweep_empty_manifest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("empty.toml");
    std::fs::write(&m, "name = \"nothing\"\n").unwrap();
    assert_eq!(run(bin().args(["sweep", "--out"]).arg(dir.path()).arg(&m)).status.code(), Some(2));
}

#[test]
fn sweep_failed_cell_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.toml");
    // Entry after the horizon passes parsing but fails when the run starts.
    std::fs::write(&m, "horizon = 50\nseeds = [0]\n[[cell]]\npreset = \"O1\"\nagents = [\"TS\", \"TS\"]\nentry = [1, 80]\n").unwrap();
    let out = dir.path().join("out");
    let o = run(bin().args(["sweep", "--out"]).arg(&out).arg(&m));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(out.join("rows.csv")).unwrap().contains("failed"));
}
