//! End-to-end tests of the `vesselwalk` binary: exit codes, JSON report
//! shapes and the flag surface, driven through real files in temp dirs.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vesselwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vesselwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn synth_into(dir: &Path, extra: &[&str]) -> Value {
    let dir = dir.to_str().unwrap();
    let mut args = vec!["synth", dir, "--seed", "3"];
    args.extend_from_slice(extra);
    let out = vesselwalk(&args);
    assert_eq!(out.status.code(), Some(0), "synth failed: {}", String::from_utf8_lossy(&out.stderr));
    json_of(&out)
}

#[test]
fn synth_writes_fixture_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let report = synth_into(tmp.path(), &[]);
    assert_eq!(report["schema"], "vesselwalk/synth/v1");
    assert_eq!(report["manifest"]["subcommand"], "synth");
    assert!(!report["gaps"].as_array().unwrap().is_empty());
    for file in ["truth.pgm", "broken.pgm", "prob.pgm", "gaps.json"] {
        assert!(tmp.path().join(file).is_file(), "{file} missing");
    }
}

#[test]
fn reconnect_defaults_list_gap_statuses() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(tmp.path(), &[]);
    let out_mask = tmp.path().join("out.pgm");
    let out = vesselwalk(&[
        "reconnect",
        tmp.path().join("prob.pgm").to_str().unwrap(),
        tmp.path().join("broken.pgm").to_str().unwrap(),
        out_mask.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["schema"], "vesselwalk/reconnect/v1");
    let records = report["report"]["records"].as_array().unwrap();
    assert!(!records.is_empty(), "expected per-fragment records");
    for r in records {
        assert!(r["status"].is_string(), "record missing status: {r}");
    }
    assert!(
        report["components_after"].as_u64() <= report["components_before"].as_u64(),
        "components must not grow"
    );
    assert!(out_mask.is_file());
}

#[test]
fn reconnect_alpha_zero_stamps_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(tmp.path(), &[]);
    let out = vesselwalk(&[
        "reconnect",
        tmp.path().join("prob.pgm").to_str().unwrap(),
        tmp.path().join("broken.pgm").to_str().unwrap(),
        tmp.path().join("out.pgm").to_str().unwrap(),
        "--alpha",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["report"]["stamped_total"], 0);
    assert_eq!(report["components_before"], report["components_after"]);
}

#[test]
fn reconnect_mismatched_dimensions_exits_2() {
    let small = tempfile::tempdir().unwrap();
    let large = tempfile::tempdir().unwrap();
    synth_into(small.path(), &["--image-side", "96"]);
    synth_into(large.path(), &[]);
    let out = vesselwalk(&[
        "reconnect",
        small.path().join("prob.pgm").to_str().unwrap(),
        large.path().join("broken.pgm").to_str().unwrap(),
        large.path().join("out.pgm").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty(), "expected a diagnostic on standard error");
}

#[test]
fn eval_perfect_prediction_scores_ones() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(tmp.path(), &[]);
    let truth = tmp.path().join("truth.pgm");
    let out = vesselwalk(&[
        "eval",
        truth.to_str().unwrap(),
        truth.to_str().unwrap(),
        "--prob",
        tmp.path().join("prob.pgm").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["schema"], "vesselwalk/eval/v1");
    assert_eq!(report["eval"]["acc"], 1.0);
    assert_eq!(report["eval"]["sen"], 1.0);
    assert_eq!(report["eval"]["spe"], 1.0);
    let auc = report["eval"]["auc"].as_f64().unwrap();
    assert!(auc > 0.9, "auc of the simulated map vs truth: {auc}");
}

#[test]
fn eval_consumes_reconnect_report_for_err() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(tmp.path(), &[]);
    let out_mask = tmp.path().join("out.pgm");
    let reconnect = vesselwalk(&[
        "reconnect",
        tmp.path().join("prob.pgm").to_str().unwrap(),
        tmp.path().join("broken.pgm").to_str().unwrap(),
        out_mask.to_str().unwrap(),
    ]);
    assert_eq!(reconnect.status.code(), Some(0));
    let manifest = tmp.path().join("reconnect.json");
    std::fs::write(&manifest, &reconnect.stdout).unwrap();

    let out = vesselwalk(&[
        "eval",
        out_mask.to_str().unwrap(),
        tmp.path().join("truth.pgm").to_str().unwrap(),
        "--roi-manifest",
        manifest.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    let err = report["eval"]["err"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&err), "err out of range: {err}");

    // Recompute the mean per-ROI false-positive fraction from the report's
    // own per-ROI counts.
    let rois = report["eval"]["rois"].as_array().unwrap();
    assert!(!rois.is_empty());
    let want: f64 = rois
        .iter()
        .map(|r| {
            let (tp, fp) = (r["tp"].as_f64().unwrap(), r["fp"].as_f64().unwrap());
            fp / (tp + fp)
        })
        .sum::<f64>()
        / rois.len() as f64;
    assert!((err - want).abs() < 1e-12, "err {err} vs recomputed {want}");
}

#[test]
fn sweep_reports_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(&tmp.path().join("a"), &[]);
    let out = vesselwalk(&["sweep", tmp.path().to_str().unwrap(), "--parameter", "alpha"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["schema"], "vesselwalk/sweep/v1");
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 11, "alpha runs 0.00..0.50 step 0.05");
    assert_eq!(rows[0]["err"], 0.0, "alpha=0 row must score Err 0");
}

#[test]
fn sweep_missing_fixtures_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vesselwalk(&["sweep", tmp.path().to_str().unwrap(), "--parameter", "roi-size"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dice_check_passes_and_fails_by_tolerance() {
    let out = vesselwalk(&["dice-check"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["pass"], true);

    // An impossible tolerance flips the exit code to 1 (failed check).
    let out = vesselwalk(&["dice-check", "--tolerance", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["pass"], false);
}

#[test]
fn ddb_rf_prints_shape_report() {
    let out = vesselwalk(&["ddb-rf", "--mode", "dense", "--repeats", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["receptive_field"], 65);
    assert_eq!(report["impulse_support"], 65);
    assert_eq!(report["oracle_agrees"], true);
}

#[test]
fn otsu_thresholds_and_writes_mask() {
    let tmp = tempfile::tempdir().unwrap();
    synth_into(tmp.path(), &["--noise-amplitude", "0.2"]);
    let mask_path = tmp.path().join("bin.pgm");
    let out = vesselwalk(&[
        "otsu",
        tmp.path().join("prob.pgm").to_str().unwrap(),
        "--out-mask",
        mask_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let threshold = json_of(&out)["threshold"].as_f64().unwrap();
    assert!((0.0..1.0).contains(&threshold), "threshold out of range: {threshold}");
    assert!(mask_path.is_file());
}

#[test]
fn unreadable_input_exits_2() {
    let out = vesselwalk(&["otsu", "/nonexistent/prob.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}
