use std::process::Command;

use adaptive_observer::harness::config::PlantConfig;
use adaptive_observer::harness::{audit_log, compare_estimators, presets, run_experiment, RunConfig};
use adaptive_observer::{Error, InputProfile, Variant};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adaptive-observer"))
}

#[test]
fn identical_configs_give_byte_identical_csv() {
    let cfg = presets::get("mimo_stable_rich").unwrap().with_horizon(400);
    let a = run_experiment(&cfg).unwrap().to_csv_string().unwrap();
    let b = run_experiment(&cfg).unwrap().to_csv_string().unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_layout() {
    let log = run_experiment(&presets::get("siso_example").unwrap().with_horizon(25)).unwrap();
    let text = log.to_csv_string().unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..6], &["t", "u_0", "y_0", "y_hat_0", "p_hat_0", "p_hat_1"]);
    assert!(header.contains(&"p_norm_3"));
    assert_eq!(header.last(), Some(&"output_residual"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 25);
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first.len(), header.len());
    assert_eq!(first[0], "1");
    // 17 significant digits
    assert_eq!(first[1], format!("{:.16e}", (0.2f64).sin()));
}

#[test]
fn zero_plant_gives_zero_signals() {
    let cfg = RunConfig::from_json(
        r#"{
        "name": "zero",
        "plant": {"kind": "transfer_function", "a_coeffs": [0.0, 0.0], "numerators": [[[0.0]], [[0.0]]]},
        "x0": [0.0, 0.0],
        "observer": {"f_vec": [0.5, -0.06], "x_hat0": [0.0, 0.0], "a_hat0": [0.5, -0.06], "b_hat0": [[0.0], [0.0]]},
        "input": {"kind": "constant", "values": [0.0]},
        "horizon": 50
    }"#,
    )
    .unwrap();
    let log = run_experiment(&cfg).unwrap();
    assert_eq!(log.rows.len(), 50);
    for r in &log.rows {
        assert!(r
            .u
            .iter()
            .chain(r.y.iter())
            .chain(r.y_hat.iter())
            .chain(r.p_hat.iter())
            .all(|v| *v == 0.0));
        assert_eq!(r.x_err, 0.0);
        assert!(!r.reset);
    }
}

#[test]
fn siso_reset_bounded_and_forgetting_flagged() {
    let reset = run_experiment(&presets::get("siso_example").unwrap()).unwrap();
    assert_eq!(reset.summary.steps, 10_000);
    assert!(!reset.summary.drift_flagged);
    assert!(reset.summary.max_p_hat_norm < 10.0);

    let forgetting = run_experiment(&presets::get("siso_example_forgetting").unwrap()).unwrap();
    assert!(forgetting.summary.drift_flagged);
}

#[test]
fn comparison_under_rich_input_converges_for_both() {
    let cmp = compare_estimators(&presets::get("siso_multisine").unwrap().with_horizon(3000)).unwrap();
    for s in [&cmp.reset.summary, &cmp.forgetting.summary] {
        assert!(s.final_p_err < 1e-6, "{}: {}", s.variant, s.final_p_err);
    }
    let table = cmp.table();
    assert!(table.contains("covariance_reset") && table.contains("forgetting(lambda=0.5)"));
}

#[test]
fn post_run_audit_replays_logged_data() {
    for name in ["siso_example", "siso_multisine", "mimo_stable_rich", "mimo_example_nonrich"] {
        let cfg = presets::get(name).unwrap().with_horizon(500);
        let exp = cfg.validate().unwrap();
        let log = run_experiment(&cfg).unwrap();
        let worst = audit_log(&exp, &log).unwrap();
        assert!(worst < 1e-9, "{name}: {worst:e}");
        assert!(log.summary.max_state_residual < 1e-9 && log.summary.max_output_residual < 1e-9);
    }
}

#[test]
fn unstable_plant_is_truncated_with_marker() {
    let mut cfg = presets::get("mimo_example_nonrich").unwrap();
    cfg.overflow_cap = 1e6;
    let log = run_experiment(&cfg).unwrap();
    let tr = log.summary.truncation.clone().expect("guard fires");
    assert!(log.rows.len() < cfg.horizon);
    assert_eq!(tr.at_step, log.rows.len() + 1);
    assert!(log.summary.all_finite && log.summary.drift_flagged);
    assert!(log.summary_text().contains("truncated: step"));
}

#[test]
fn validation_lists_every_problem() {
    let mut cfg = presets::get("siso_example").unwrap();
    cfg.horizon = 0;
    cfg.x0 = vec![1.0];
    cfg.observer.f_vec = vec![3.0, 0.0];
    cfg.input = InputProfile::sine(1.0, 4.0);
    let Err(Error::Config(issues)) = cfg.validate() else {
        panic!("expected config error")
    };
    let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
    for want in ["horizon", "x0", "observer.f_vec", "input"] {
        assert!(paths.iter().any(|p| p.starts_with(want)), "{want} missing from {paths:?}");
    }
}

#[test]
fn stable_preset_is_checked_at_load() {
    let mut cfg = presets::get("mimo_stable_rich").unwrap();
    if let PlantConfig::Canonical { a, .. } = &mut cfg.plant {
        a[0][0] = 1.5;
        a[1][1] = 1.5;
    }
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn cli_presets_list() {
    let out = bin().args(["presets", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in presets::list() {
        assert!(text.contains(name));
    }
}

#[test]
fn cli_run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "run",
            "preset:siso_example",
            "preset:mimo_stable_nonrich",
            "--horizon",
            "40",
            "--variant",
            "ordinary",
            "--out-dir",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("siso_example.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    let summary = std::fs::read_to_string(dir.path().join("mimo_stable_nonrich.summary.txt")).unwrap();
    assert!(summary.contains("variant: ordinary"));
    assert!(summary.contains("steps: 40 / 40"));
}

#[test]
fn cli_compare_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["compare", "preset:siso_example", "--horizon", "200", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = std::fs::read_to_string(dir.path().join("siso_example.comparison.txt")).unwrap();
    assert!(table.contains("covariance_reset"));
    assert!(dir.path().join("siso_example.forgetting.csv").exists());
    assert!(dir.path().join("siso_example.reset.summary.txt").exists());
}

#[test]
fn cli_validate_reports_issues_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = presets::get("siso_example").unwrap().with_horizon(0);
    cfg.observer.x_hat0 = vec![0.0; 3];
    let path = dir.path().join("bad.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("horizon") && err.contains("observer.x_hat0"), "{err}");

    let ok = bin().args(["validate", "preset:mimo_example_rich"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8(ok.stdout).unwrap().contains("d=15"));
}

#[test]
fn variant_override_round_trips_through_json() {
    let cfg = presets::get("siso_example")
        .unwrap()
        .with_variant(Variant::Forgetting { lambda: 0.9 });
    let back = RunConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back.observer.estimator.variant, Variant::Forgetting { lambda: 0.9 });
}
