use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kinetic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinetic")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(2).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bessel_point_matches_quadrature() {
    let o = kinetic(&["bessel", "--f", "1,2", "--z", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# {"));
    let row = &csv_rows(&text)[0];
    // plain midpoint rule on 4096 nodes, independent of the library quadrature
    let n = 4096;
    let direct: f64 = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
            ((3.0 * t).sin() + 2.0 * (2.0 * t).sin()).cos()
        })
        .sum::<f64>()
        / n as f64;
    assert!((row[1] - direct).abs() < 1e-10, "{} vs {direct}", row[1]);
}

#[test]
fn bessel_trivial_point() {
    let o = kinetic(&["bessel", "--f", "0,0", "--z", "0"]);
    assert_eq!(csv_rows(&stdout(&o))[0][1], 1.0);
}

#[test]
fn bessel_scan_brackets_the_cnot_root() {
    let o = kinetic(&["bessel", "--f", "1,2", "--scan", "0:8:400"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 400);
    let bracket = rows.windows(2).find(|w| w[0][1] * w[1][1] < 0.0 && w[0][0] < 4.26 && w[1][0] >= 4.26);
    assert!(bracket.is_some(), "no sign change around 4.26");
}

#[test]
fn validation_errors_exit_one() {
    for args in [
        &["bessel", "--f", "1,x"][..],
        &["run", "teleport"],
        &["run", "cnot", "--omega", "-3"],
        &["optimize", "--preset", "toffoli-x"],
        &["verify", "table7"],
        &[],
    ] {
        let o = kinetic(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn sanity_failure_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "run", "toffoli", "--n", "4", "--profile", "0,0,0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stage"));
}

#[test]
fn config_file_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"command":"run","protocol":"cnot","colour":"red"}"#).unwrap();
    let o = kinetic(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    fs::write(&cfg, r#"{"command":"verify","table":"table1","protocol":"cnot"}"#).unwrap();
    assert_eq!(kinetic(&["--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn optimize_toffoli4_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "optimize", "--preset", "toffoli-4", "--starts", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("optimize.json"));
    assert!(v["report"]["result"]["g"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["header"]["tool"], "kinetic");
}

#[test]
fn optimize_empty_closed_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "optimize", "--closed", "", "--open", "-1", "--harmonics", "2", "--starts", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("optimize.json"))["report"]["result"]["g"], 0.0);
}

#[test]
fn optimize_without_solution_warns_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // the floor exceeds |𝒥| ≤ 1, so no start can be accepted
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "optimize", "--preset", "cnot", "--floor", "2", "--starts", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(json(&dir.path().join("optimize.json"))["report"]["result"]["success"], false);
}

#[test]
fn qutrit_ctrl2_optimum_meets_the_table2_bar() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "optimize", "--preset", "qutrit-ctrl-2", "--starts", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let g = json(&dir.path().join("optimize.json"))["report"]["result"]["g"].as_f64().unwrap();
    assert!(g <= 1e-6, "g = {g}");
}

#[test]
fn run_cnot_report_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "run", "cnot", "--omega", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("cnot.json"));
    assert!(v["report"]["metrics"]["min_population_floquet"].as_f64().unwrap() >= 0.99);
    assert!(v["header"]["basis"]["ordering"].is_string());
    let csv = fs::read_to_string(dir.path().join("cnot_floquet_uu.csv")).unwrap();
    assert!(csv.starts_with("# {") && csv.lines().nth(1).unwrap().starts_with("t,sz_1"));
}

#[test]
fn run_ghz_reaches_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "run", "ghz", "--n", "4", "--omega", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("ghz-4.json"));
    assert!(v["report"]["metrics"]["fidelity_floquet"].as_f64().unwrap() >= 0.995);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = kinetic(&["--out", d.path().to_str().unwrap(), "run", "w-state"]);
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["w-state.json", "w-state_floquet.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        // output_dir is part of the hashed config, so compare past the header
        let body = |v: &[u8]| String::from_utf8_lossy(v).lines().skip(if name.ends_with(".csv") { 1 } else { 0 }).filter(|l| !l.contains("config_sha256")).collect::<Vec<_>>().join("\n");
        assert_eq!(body(&x), body(&y), "{name}");
    }
}

#[test]
fn same_config_file_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("out");
    fs::write(&cfg, format!(r#"{{"command":"optimize","preset":"cnot","starts":5,"seed":7,"output_dir":{:?}}}"#, out.to_str().unwrap())).unwrap();
    let run = || {
        let o = kinetic(&["--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        fs::read(out.join("optimize.json")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn error_scan_on_a_short_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = kinetic(&["--out", dir.path().to_str().unwrap(), "run", "error-scan", "--n", "4", "--omegas", "100,200,400", "--t-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("error-scan-4.json"));
    assert_eq!(v["report"]["points"].as_array().unwrap().len(), 3);
    let slope = v["report"]["fit"]["slope"].as_f64().unwrap();
    assert!(slope < -0.5, "slope {slope}");
    assert!(dir.path().join("error-scan-4_trace_2.csv").exists());
}

#[test]
fn verify_table1_passes_and_strict_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(kinetic(&["--out", d, "verify", "table1"]).status.code(), Some(0));
    let o = kinetic(&["--out", d, "verify", "table1", "--strict", "1e-9"]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("FAIL (strict)")).count(), 6);
}

#[test]
fn jobs_flag() {
    assert_eq!(kinetic(&["--jobs", "0", "bessel", "--f", "1", "--z", "0"]).status.code(), Some(1));
    assert_eq!(kinetic(&["--jobs", "1", "bessel", "--f", "1", "--z", "0"]).status.code(), Some(0));
}

#[test]
fn schema_lists_every_config_field() {
    let schema: serde_json::Value = serde_json::from_str(include_str!("../../../docs/run-config.schema.json")).unwrap();
    let props: Vec<&String> = schema["properties"].as_object().unwrap().keys().collect();
    let full = r#"{"command":"run","protocol":"ghz"}"#;
    let cfg = kinetic_cli::config::RunConfig::from_json(full).unwrap();
    let mut all = serde_json::to_value(&cfg).unwrap();
    // fill every optional field so that it serializes
    for k in ["f", "z", "scan", "preset", "closed", "open", "harmonics", "floor", "starts", "n", "profile", "v1", "omegas", "t_max", "floquet", "table", "strict"] {
        assert!(props.iter().any(|p| p.as_str() == k), "schema misses {k}");
        all[k] = serde_json::Value::Null;
    }
    for k in all.as_object().unwrap().keys() {
        assert!(props.iter().any(|p| p == &k), "schema misses {k}");
    }
    assert_eq!(props.len(), all.as_object().unwrap().len());
}
