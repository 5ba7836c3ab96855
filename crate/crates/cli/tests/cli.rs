use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mtlab_cli::reproduce::{exit_code, reproduce_selected, CoreMetrics, MetricProvider};
use mtlab_cli::{run, CliError, ExperimentConfig, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION};
use mtlab_core::closed_form::AnalyticSolution;
use mtlab_core::{Error, Grid, Measure, ModelFile};
use serde_json::json;
use tempfile::TempDir;

fn mtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtlab")).args(args).env_remove("MTLAB_WORKERS").output().unwrap()
}

fn code(out: &Output) -> u8 {
    out.status.code().unwrap() as u8
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> String {
    let path = dir.join(name);
    fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn outflow_model() -> serde_json::Value {
    json!({
        "grid": [0, 1, 2],
        "g1": [[0, 1], [2, 0.5]],
        "c": [0.5, 1, 0],
        "initial": {"a": [[0.5, 1]], "b": [[0.6, 1]]},
        "solver": {"dt": 0.01, "T": 0.5}
    })
}

#[test]
fn metric_prints_fifteen_digits() {
    let out = mtlab(&["metric", "--kind", "mt", "--grid", "[0,1,2]", "--m1", "[[1,1]]", "--m2", "[[0.75,1]]"]);
    assert_eq!(code(&out), EXIT_OK);
    assert_eq!(stdout(&out).trim(), "0.25");
    let out = mtlab(&["metric", "--kind", "flat", "--m1", "[[0,1]]", "--m2", "[[0.1,1]]"]);
    assert_eq!(stdout(&out).trim(), "0.1");
}

#[test]
fn metric_without_grid_is_a_config_error() {
    let out = mtlab(&["metric", "--kind", "mt", "--m1", "[[1,1]]", "--m2", "[[0.75,1]]"]);
    assert_eq!(code(&out), EXIT_CONFIG);
    let out = mtlab(&["metric", "--kind", "flat", "--m1", "[[1,-1]]", "--m2", "[[0.75,1]]"]);
    assert_eq!(code(&out), EXIT_CONFIG);
}

#[test]
fn nonzero_last_outflow_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut model = outflow_model();
    model["c"] = json!([0.5, 1, 0.2]);
    let path = write_json(dir.path(), "model.json", &model);
    let csv = dir.path().join("t.csv");
    let out = mtlab(&["simulate", "--model", &path, "--measure", "a", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_CONFIG);
    assert!(String::from_utf8_lossy(&out.stderr).contains("c_N=0"));

    let config = ExperimentConfig {
        model: serde_json::from_value(model).unwrap(),
        ..serde_json::from_value(json!({"model": "x", "T": 1, "dt": 0.1, "out_dir": "o"})).unwrap()
    };
    match run(&config, dir.path()) {
        Err(CliError::Core(Error::AssumptionViolated(item))) => assert_eq!(item, "c_N=0"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn free_atom_config_has_flat_distance_t_plus_eps() {
    let dir = TempDir::new().unwrap();
    let grid = Grid::new(vec![0.0, 1.0, 2.0]).unwrap();
    let eps = 0.1;
    let sol = AnalyticSolution::FreeAtom { eps };
    let mut file = ModelFile::from_model(&sol.model(&grid).unwrap());
    let (a, b) = sol.initial(&grid).unwrap();
    file.initial.insert("a".into(), a);
    file.initial.insert("b".into(), b);
    write_json(dir.path(), "model.json", &serde_json::to_value(&file).unwrap());
    let config = json!({
        "model": "model.json", "T": 0.5, "dt": 0.01,
        "metrics": ["flat"], "pairs": [["a", "b"]], "out_dir": "out"
    });
    let config_path = write_json(dir.path(), "config.json", &config);
    let out = mtlab(&["run", "--config", &config_path]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(dir.path().join("out/metrics_a_b.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,flat"));
    let mut rows = 0;
    for line in lines {
        let (t, flat) = line.split_once(',').unwrap();
        let (t, flat): (f64, f64) = (t.parse().unwrap(), flat.parse().unwrap());
        assert!((flat - (t + eps)).abs() <= 1e-12, "t = {t}: {flat}");
        rows += 1;
    }
    assert_eq!(rows, 51);
    assert!(dir.path().join("out/stability_a_b.csv").exists());
    assert!(dir.path().join("out/summary.json").exists());
}

#[test]
fn empty_measure_gives_zero_trajectory() {
    let dir = TempDir::new().unwrap();
    let mut model = outflow_model();
    model["initial"] = json!({"empty": []});
    let path = write_json(dir.path(), "model.json", &model);
    let csv = dir.path().join("t.csv");
    let out = mtlab(&["simulate", "--model", &path, "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 52);
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(&cells[1..], ["0", "0", "0"]);
    }
}

#[test]
fn simulate_writes_snapshots() {
    let dir = TempDir::new().unwrap();
    let path = write_json(dir.path(), "model.json", &outflow_model());
    let csv = dir.path().join("traj.csv");
    let out = mtlab(&[
        "simulate",
        "--model",
        &path,
        "--measure",
        "a",
        "--dt",
        "0.1",
        "--horizon",
        "0.4",
        "--out",
        csv.to_str().unwrap(),
        "--snapshot-every",
        "2",
    ]);
    assert_eq!(code(&out), EXIT_OK);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().next(), Some("t,total_mass,v,atoms_count"));
    for k in [0, 2, 4] {
        let snap: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("traj.step{k}.json"))).unwrap()).unwrap();
        assert!(snap["atoms"].is_array());
    }
    assert!(!dir.path().join("traj.step1.json").exists());
}

#[test]
fn ambiguous_measure_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let path = write_json(dir.path(), "model.json", &outflow_model());
    let out = mtlab(&["simulate", "--model", &path, "--out", dir.path().join("t.csv").to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_CONFIG);
}

#[test]
fn runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    write_json(dir.path(), "model.json", &outflow_model());
    let config = |out: &str| {
        json!({
            "model": "model.json", "T": 0.5, "dt": 0.01, "metrics": ["norm", "w1", "flat", "mt"],
            "pairs": [["a", "b"]], "perturbations": {"count": 3, "shift": 0.05, "weight": 0.05},
            "out_dir": out, "seed": 11
        })
    };
    let first = write_json(dir.path(), "one.json", &config("one"));
    let second = write_json(dir.path(), "two.json", &config("two"));
    assert_eq!(code(&mtlab(&["--workers", "1", "run", "--config", &first])), EXIT_OK);
    assert_eq!(code(&mtlab(&["--workers", "3", "run", "--config", &second])), EXIT_OK);
    let mut names: Vec<_> = fs::read_dir(dir.path().join("one")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5);
    for name in names {
        let a = fs::read(dir.path().join("one").join(&name)).unwrap();
        let b = fs::read(dir.path().join("two").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
    }
}

#[test]
fn stability_subcommand_writes_tables() {
    let dir = TempDir::new().unwrap();
    let mut model = outflow_model();
    model.as_object_mut().unwrap().remove("solver");
    let path = write_json(dir.path(), "model.json", &model);
    let out_path = dir.path().join("stab.csv");
    let pairs = r#"[["a", "b"], {"mu1": [[0.2, 1]], "mu2": [[0.25, 0.9]]}]"#;
    let out = mtlab(&["stability", "--model", &path, "--pairs", pairs, "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    for k in 0..2 {
        let text = fs::read_to_string(dir.path().join(format!("stab_{k}.csv"))).unwrap();
        assert!(text.starts_with("t,rho_mt,rho_flat,bound_local,bound_global,margin,violated\n"));
        assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
    }
}

#[test]
fn constants_subcommand_prints_json() {
    let dir = TempDir::new().unwrap();
    let path = write_json(dir.path(), "model.json", &outflow_model());
    let out = mtlab(&["constants", "--model", &path, "--m1", "a", "--m2", "b"]);
    assert_eq!(code(&out), EXIT_OK);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["t_max"], json!(1.0));
    assert_eq!(value["c1"].as_array().unwrap().len(), 10);
    let out = mtlab(&["constants", "--model", &path, "--m1", "a", "--m2", "nope"]);
    assert_eq!(code(&out), EXIT_CONFIG);
}

#[test]
fn examples_subcommand_tracks_analytic() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("ex.csv");
    let out = mtlab(&["examples", "--which", "free-atom", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), EXIT_OK);
    for line in fs::read_to_string(&csv).unwrap().lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v[1] - v[2]).abs() <= 1e-9, "{line}");
        assert!(v[2] <= v[3] + 1e-9, "{line}");
    }
    assert_eq!(code(&mtlab(&["examples", "--which", "4.5", "--out", csv.to_str().unwrap()])), EXIT_CONFIG);
    assert_eq!(code(&mtlab(&["examples", "--out", csv.to_str().unwrap()])), EXIT_CONFIG);
    assert_eq!(code(&mtlab(&["--help"])), EXIT_OK);
}

#[test]
fn workers_env_overrides_flag() {
    let bad = Command::new(env!("CARGO_BIN_EXE_mtlab"))
        .args(["--workers", "2", "reproduce-all", "--list"])
        .env("MTLAB_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad), EXIT_CONFIG);
    assert_eq!(code(&mtlab(&["--workers", "0", "reproduce-all", "--list"])), EXIT_CONFIG);
}

#[test]
fn list_prints_names_without_running() {
    let out = mtlab(&["reproduce-all", "--list"]);
    assert_eq!(code(&out), EXIT_OK);
    let names: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(names.len(), 11);
    assert!(names.contains(&"unit-atom-shifts".to_owned()));
    assert!(names.iter().all(|n| !n.contains("PASS")));
}

/// Flat distance off by a tenth.
struct Skewed;

impl MetricProvider for Skewed {
    fn norm(&self, a: &Measure, b: &Measure) -> f64 {
        CoreMetrics.norm(a, b)
    }

    fn flat(&self, a: &Measure, b: &Measure) -> f64 {
        CoreMetrics.flat(a, b) * 1.1
    }

    fn mt(&self, a: &Measure, b: &Measure, grid: &Grid) -> f64 {
        CoreMetrics.mt(a, b, grid)
    }

    fn w1(&self, a: &Measure, b: &Measure) -> Option<f64> {
        CoreMetrics.w1(a, b)
    }
}

#[test]
fn injected_metric_bug_fails_reproduction() {
    let names = ["unit-atom-shifts", "nearby-atoms", "free-atom", "oracle-equivalence"];
    let good = reproduce_selected(&names, &CoreMetrics, 1).unwrap();
    assert!(good.iter().all(|r| r.pass), "{good:?}");
    assert_eq!(exit_code(&good), EXIT_OK);
    let bad = reproduce_selected(&names, &Skewed, 1).unwrap();
    assert!(bad.iter().all(|r| !r.pass), "{bad:?}");
    assert_eq!(exit_code(&bad), EXIT_VIOLATION);
    assert!(reproduce_selected(&["no-such-check"], &CoreMetrics, 1).is_none());
}
