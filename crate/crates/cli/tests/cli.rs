use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mlevy(sub: &str, config: &str, extra: &[&str]) -> (Output, TempDir) {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_mlevy"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (output, dir)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn report(dir: &TempDir, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.path().join("out").join(name)).unwrap()).unwrap()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(v.clone()).unwrap()
}

const TORUS: &str = r#"{"seed": 1, "manifold": "torus:n=2", "n_paths": 1,
  "triplet": {"a": [[1, 0], [0, 1]], "b": [0, 0]}}"#;

#[test]
fn torus_brownian_run_is_byte_deterministic() {
    let (a, da) = mlevy("simulate", TORUS, &[]);
    let (b, db) = mlevy("simulate", TORUS, &[]);
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    let fa = files(&da.path().join("out"));
    assert!(fa.contains_key("paths/x_0000.jsonl"));
    assert!(fa.contains_key("paths/u_0000.jsonl"));
    assert!(fa.contains_key("paths/y_0000.jsonl"));
    assert_eq!(fa, files(&db.path().join("out")));
}

#[test]
fn seed_flag_overrides_the_config() {
    let (a, da) = mlevy("simulate", TORUS, &["--seed", "2"]);
    let (_, db) = mlevy("simulate", TORUS, &[]);
    assert_eq!(code(&a), 0);
    assert_eq!(report(&da, "simulate.json")["seed"], 2);
    assert_ne!(files(&da.path().join("out")), files(&db.path().join("out")));
}

#[test]
fn non_invariant_klein_triplet_exits_3() {
    let cfg = r#"{"seed": 1, "manifold": "klein_bottle:2",
      "triplet": {"a": [[0, 0], [0, 0]], "b": [0, 0],
        "nu": {"kind": "point_masses", "atoms": [{"x": [0.3, 0.2], "weight": 1.0}]}}}"#;
    let (o, _d) = mlevy("simulate", cfg, &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let overridden = cfg.replacen("\"seed\": 1,", "\"seed\": 1, \"override_invariance\": true,", 1);
    let (o, _d) = mlevy("simulate", &overridden, &[]);
    assert_eq!(code(&o), 0);
}

#[test]
fn flat_drift_is_a_straight_line() {
    let cfg = r#"{"seed": 4, "manifold": "flat:2", "grid_step": 0.05,
      "triplet": {"a": [[0, 0], [0, 0]], "b": [1.5, -0.5]}}"#;
    let (o, d) = mlevy("simulate", cfg, &["--csv"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(d.path().join("out/paths/x_0000.jsonl")).unwrap();
    let mut n = 0;
    for line in text.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        let t = rec["t"].as_f64().unwrap();
        let x: Vec<f64> = serde_json::from_value(rec["x"].clone()).unwrap();
        assert!((x[0] - 1.5 * t).abs() <= 1e-12 && (x[1] + 0.5 * t).abs() <= 1e-12, "t={t}: {x:?}");
        n += 1;
    }
    assert_eq!(n, 21);
    assert!(d.path().join("out/paths/x_0000.csv").exists());
}

#[test]
fn torus_holonomy_is_trivial() {
    let (o, d) = mlevy("holonomy", r#"{"seed": 1, "manifold": "torus:n=2"}"#, &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("trivial: PASS"));
    assert_eq!(report(&d, "holonomy.json")["loops"].as_array().unwrap().len(), 2);
}

#[test]
fn quarter_cylinder_wrap_rotates_by_a_right_angle() {
    let cfg = r#"{"seed": 1, "manifold": "cylinder:alpha=0.25", "holonomy": {"loops": "wraps", "n_loops": 2}}"#;
    let (o, d) = mlevy("holonomy", cfg, &[]);
    assert_eq!(code(&o), 0);
    let loops = &report(&d, "holonomy.json")["loops"];
    let t = matrix(&loops[1]["transport"]);
    let want = [[0.0, -1.0], [1.0, 0.0]];
    let err: f64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (t[i][j] - want[i][j]).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(err <= 1e-6, "{t:?}");
    assert!((loops[1]["angle"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() <= 1e-6);
}

#[test]
fn sphere_triangle_reports_the_enclosed_area() {
    let cfg = r#"{"seed": 1, "manifold": "sphere:2", "holonomy": {"loops": "octant_triangle"}}"#;
    let (o, d) = mlevy("holonomy", cfg, &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let angle = report(&d, "holonomy.json")["loops"][0]["angle"].as_f64().unwrap();
    assert!((angle.abs() - std::f64::consts::FRAC_PI_2).abs() <= 1e-4, "{angle}");
}

#[test]
fn flat_roundtrip_is_exact() {
    let cfg = r#"{"seed": 9, "manifold": "flat:2", "n_paths": 3,
      "triplet": {"a": [[0.5, 0], [0, 0.5]], "b": [0.2, 0.1],
        "nu": {"kind": "gaussian_radial", "intensity": 5.0, "scale": 0.5}},
      "roundtrip": {"tolerance": 1e-12}}"#;
    let (o, d) = mlevy("roundtrip", cfg, &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(report(&d, "roundtrip.json")["max_antidev"].as_f64().unwrap() <= 1e-12);
    assert!(d.path().join("out/paths/w_0002.jsonl").exists());
}

#[test]
fn roundtrip_failure_exits_1() {
    let cfg = r#"{"seed": 9, "manifold": "sphere:2", "grid_step": 0.1,
      "triplet": {"a": [[1, 0], [0, 1]], "b": [0, 0]},
      "roundtrip": {"tolerance": 1e-15, "lift": {"refine": 1}}}"#;
    let (o, _d) = mlevy("roundtrip", cfg, &[]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("roundtrip: FAIL"));
}

#[test]
fn invariance_table_reports_each_condition() {
    let cfg = r#"{"seed": 1, "manifold": "flat:2",
      "triplet": {"a": [[2, 0], [0, 1]], "b": [0, 0]},
      "invariance": {"group": [[[0, -1], [1, 0]]]}}"#;
    let (o, d) = mlevy("invariance", cfg, &[]);
    assert_eq!(code(&o), 1);
    let r = report(&d, "invariance.json");
    assert_eq!(r["elements"][0]["a"]["outcome"], "FAIL");
    assert_eq!(r["elements"][0]["nu"]["outcome"], "PASS");
    let iso = cfg.replace("[[2, 0], [0, 1]]", "[[1, 0], [0, 1]]");
    let (o, _d) = mlevy("invariance", &iso, &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("invariance: PASS"));
}

#[test]
fn generator_test_on_the_cylinder_passes() {
    let cfg = r#"{"seed": 3, "manifold": "cylinder:alpha=0.5", "n_paths": 4000,
      "triplet": {"a": [[0.5, 0], [0, 0.5]], "b": [0, 0],
        "nu": {"kind": "point_masses", "atoms": [{"x": [0.3, 0.1], "weight": 1.0}, {"x": [-0.3, -0.1], "weight": 1.0}]}},
      "start": {"x": [0.4, 0.2]},
      "generator_test": {"test_function": "coordinate:1", "grid_fraction": 8}}"#;
    let (o, d) = mlevy("generator-test", cfg, &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(report(&d, "generator_test.json")["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn config_errors_exit_2() {
    for cfg in [
        r#"{"manifold": "torus:n=2"}"#,
        r#"{"seed": 1, "manifold": "torus:n=2", "typo": 1}"#,
        r#"{"seed": 1, "manifold": "doughnut"}"#,
        r#"{"seed": 1, "manifold": "torus:n=2", "triplet": {"a": [[1]], "b": [0]}}"#,
        r#"{"seed": 1, "manifold": "torus:n=2", "grid_step": -1}"#,
    ] {
        let (o, _d) = mlevy("simulate", cfg, &[]);
        assert_eq!(code(&o), 2, "{cfg}");
    }
}
