use std::path::Path;
use std::process::{Command, Output};

fn biphoton(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eval_prints_all_amplitudes() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["eval", "--point", "3,-2", "--point", "-10,4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let closed = row["f_doppler_closed"].as_array().unwrap();
        let quad = row["f_doppler_quad"]["value"].as_array().unwrap();
        assert!(row["f_doppler_quad"]["converged"].as_bool().unwrap());
        for k in 0..2 {
            assert!((closed[k].as_f64().unwrap() - quad[k].as_f64().unwrap()).abs() < 1e-6);
        }
    }
    assert_eq!(v["units"], biphoton::cli_io::report::UNITS);
}

#[test]
fn counter_propagating_eval_has_no_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["eval", "--scheme", "counter", "--evaluator", "quad", "--point", "0,0"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["result"][0]["f_doppler_closed"].is_null());
}

#[test]
fn closed_form_with_counter_propagation_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["eval", "--scheme", "counter"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("evaluator.kind"));
}

#[test]
fn schmidt_writes_summary_and_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(
        &["schmidt", "--grid-points", "256", "--geometry", "anti_correlation", "--n-mp", "2", "--dq", "30", "--modes", "2", "--kernel-check", "--out", "res"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    let v = json(&res.join("schmidt.json"));
    let lambdas: Vec<f64> = v["result"]["lambdas"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] >= w[1]));
    assert!(v["result"]["S"].as_f64().unwrap() > 1.0);
    assert!(v["result"]["kernel_check"]["max_abs_lambda_difference"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["config"]["geometry"]["n_mp"], 2);
    for name in ["mode_s_0.csv", "mode_i_0.csv", "mode_s_1.csv", "mode_i_1.csv"] {
        let text = std::fs::read_to_string(res.join(name)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert_eq!(lines.next().unwrap(), "omega,re,im,abs2");
        assert_eq!(lines.count(), 256);
    }
    assert!(!res.join("mode_s_2.csv").exists());
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"geometry": {"family": "cross_four", "dq": 30}, "grid": {"half_width": 400, "n_points": 128}, "schmidt": {"mode_dumps": 0}}"#;
    std::fs::write(dir.path().join("run.json"), config).unwrap();
    let out = biphoton(&["schmidt", "--config", "run.json", "--out", "."], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("schmidt.json"));
    assert_eq!(v["result"]["shifts"].as_array().unwrap().len(), 4);
    assert!(!dir.path().join("mode_s_0.csv").exists());
}

#[test]
fn validate_reports_every_issue() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"physical_params": {"temperature": -1}, "geometry": {"family": "octagon", "dq": 40, "n_mp": 5}}"#,
    )
    .unwrap();
    let out = biphoton(&["validate", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("physical_params.temperature"));
    assert!(err.contains("geometry.n_mp"));

    std::fs::write(dir.path().join("good.json"), "{}").unwrap();
    let out = biphoton(&["validate", "--config", "good.json"], dir.path());
    assert!(out.status.success());
}

#[test]
fn unknown_field_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"grid": {"spacing": 1}}"#).unwrap();
    let out = biphoton(&["validate", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.spacing"));
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["schmidt", "--config", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "x").unwrap();
    let out = biphoton(&["schmidt", "--grid-points", "64", "--out", "blocker/sub"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_without_a_spec_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["sweep"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_sweep_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "sweep_grid": {"half_width": 400, "n_points": 96},
        "sweep": {"scenario": "custom", "axis": "dq", "families": ["anti_correlation"],
                  "dq_values": [0, 10, 20, 30], "temperatures": [300], "n_mp_values": [2]}
    }"#;
    std::fs::write(dir.path().join("s.json"), config).unwrap();
    let out = biphoton(&["sweep", "--config", "s.json", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("o/sweep.json"));
    let curves = summary["result"]["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 1);
    let file = curves[0]["file"].as_str().unwrap();
    let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: "));
    assert_eq!(lines[1], "param,S,K,warnings");
    assert_eq!(lines.len(), 6);
    // Four points are too few to locate a dip.
    assert!(curves[0]["dip"]["error"].is_string());
}

#[test]
fn optimize_reports_trace_and_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(
        &[
            "optimize", "--grid-points", "96", "--geometry", "anti_correlation", "--n-mp", "2", "--constraint", "family",
            "--bounds", "60", "--budget", "60", "--out", "o",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("o/optimize.json"));
    let evaluations = v["result"]["evaluations"].as_u64().unwrap();
    assert!(evaluations <= 60);
    assert_eq!(v["result"]["trace"].as_array().unwrap().len() as u64, evaluations);
    assert!(v["result"]["verified"]["S"].as_f64().unwrap().is_finite());
}

#[test]
fn unknown_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&["preset", "fig9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
