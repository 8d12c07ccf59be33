use std::process::{Command, Output};

use serde_json::Value;

fn chernlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chernlab"))
        .args(args)
        .env_remove("CHERNLAB_JOBS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn integral(form: &Value) -> f64 {
    form["integral"][0].as_f64().unwrap()
}

#[test]
fn ch_of_z_squared() {
    let r = json(&chernlab(&["ch", "--builder", "loop_zn", "--n", "2", "--res", "512"]));
    assert!((integral(&r["forms"][0]) + 2.0).abs() < 1e-8);
    let r = json(&chernlab(&["ch", "--builder", "loop_zn", "--params", r#"{"n": -3}"#]));
    assert!((integral(&r["forms"][0]) - 3.0).abs() < 1e-8);
}

#[test]
fn ch_of_constant_is_zero() {
    let r = json(&chernlab(&["ch", "--builder", "const_identity", "--res", "17,17,17"]));
    let forms = r["forms"].as_array().unwrap();
    assert_eq!(forms.len(), 2);
    assert!(forms.iter().all(|f| f["sup_norm"].as_f64() == Some(0.0)));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["ch"],
        vec!["ch", "--builder", "nope"],
        vec!["ch", "--builder", "loop_zn", "--params", "{\"m\": 1}"],
        vec!["ch", "--builder", "loop_zn", "--tol", "-1"],
        vec!["ch", "--builder", "loop_zn", "--res", "4"],
        vec!["verify", "--filter", "no_such_group"],
        vec!["frobnicate"],
    ] {
        assert_eq!(chernlab(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn cs_exactness_verdicts() {
    let r = json(&chernlab(&["cs", "--builder", "su2_chart", "--res", "16"]));
    assert_eq!(r["exactness"]["exact"], Value::Bool(true));
    let r = json(&chernlab(&["cs", "--builder", "loop_zn", "--homotopy", "constant"]));
    assert!(r["forms"][0]["sup_norm"].as_f64().unwrap() == 0.0);
    let r = json(&chernlab(&["cs", "--builder", "loop_zn", "--homotopy", "phase"]));
    assert_eq!(r["exactness"]["exact"], Value::Bool(false));
    // A one-mode loop has no symmetric window for the even inversion.
    assert_eq!(chernlab(&["cs", "--builder", "loop_zn", "--homotopy", "inversion-even"]).status.code(), Some(3));
}

#[test]
fn bott_verdicts() {
    for n in -2..=2 {
        let n = n.to_string();
        let r = json(&chernlab(&["bott", "--builder", "loop_zn", "--n", &n]));
        assert_eq!(r["report"]["verdict"], Value::Bool(true), "n = {n}");
    }
    let r = json(&chernlab(&["bott", "--builder", "bloch_circle"]));
    let q = &r["holonomy"]["q"][0][0];
    assert!((q[0].as_f64().unwrap() + 1.0).abs() < 1e-6 && q[1].as_f64().unwrap().abs() < 1e-6, "{q}");
    assert_eq!(chernlab(&["bott", "--builder", "trig_loop"]).status.code(), Some(3));
}

#[test]
fn grass_subspace_spec() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, r#"{"n_minus": 4, "n_plus": 4, "tail_modes": [-1, 0, 1, 2, 3], "bandwidth": 0}"#).unwrap();
    let r = json(&chernlab(&["grass", "--input", path.to_str().unwrap()]));
    assert_eq!(r["virtual_dimension"]["virtual_dimension"], Value::from(1));
    let r = json(&chernlab(&["grass", "--builder", "taut_cp1", "--res", "201,32"]));
    assert!((integral(&r["forms"][0]).abs() - 1.0).abs() < 1e-6);
}

#[test]
fn khat_winding() {
    let r = json(&chernlab(&["khat", "--builder", "loop_zn", "--n", "3"]));
    assert_eq!(r["class"]["invariants"]["winding"], Value::from(3));
    assert_eq!(r["class"]["checks"]["squareCommutes"], Value::Bool(true));
}

#[test]
fn csv_samples() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ch.csv");
    json(&chernlab(&["ch", "--builder", "loop_zn", "--res", "64", "--csv", csv.to_str().unwrap()]));
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("degree,component,chart,node,coords,re,im\n"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn verify_exit_codes() {
    let out = chernlab(&["verify", "--filter", "winding"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["all_pass"], Value::Bool(true));
    let out = chernlab(&["verify", "--filter", "holonomy", "--tol", "1e-14"]);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["failed"].as_u64().unwrap() > 0);
}

#[test]
fn verify_is_byte_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let run = |out: &std::path::Path, jobs: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_chernlab"))
            .args(["verify", "--filter", "monoid", "--seed", "7", "--out", out.to_str().unwrap()])
            .env("CHERNLAB_JOBS", jobs)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
    };
    run(&a, "1");
    run(&b, "8");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["seed"], Value::from(7));
}

#[test]
fn env_jobs_overrides_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_chernlab"))
        .args(["ch", "--builder", "loop_zn", "--jobs", "2"])
        .env("CHERNLAB_JOBS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
