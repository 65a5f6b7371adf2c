use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn depthpose(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthpose"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = depthpose(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str =
    r#"{"people": [2, 3], "seed": 5, "camera": {"f": 250, "cx": 208, "cy": 128, "w": 416, "h": 256}, "margin_px": 8}"#;

#[test]
fn pipeline_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.json"), SMALL).unwrap();
    ok(d, &["synth", "--config", "c.json", "--out", "scene.json"]);
    let scene = json(&d.join("scene.json"));
    assert_eq!(scene["provenance"]["config"]["seed"], 5);
    assert_eq!(scene["provenance"]["config"]["bone_jitter"], 0.05);

    ok(
        d,
        &["encode", "--scene", "scene.json", "--out", "stack.smap", "--sigma", "3"],
    );
    let meta = json(&d.join("stack.smap.json"));
    assert_eq!(meta["shape"], serde_json::json!([58, 256, 416]));
    assert_eq!(meta["provenance"]["config"]["sigma"], 3.0);
    assert_eq!(meta["provenance"]["config"]["paf_width"], 4.0);

    ok(
        d,
        &[
            "decode",
            "--stack",
            "stack.smap",
            "--camera",
            "scene.json",
            "--out",
            "pred.json",
            "--lambda",
            "1.5",
        ],
    );
    let pred = json(&d.join("pred.json"));
    assert_eq!(pred["provenance"]["method"], "dapa");
    assert_eq!(pred["provenance"]["config"]["lambda"], 1.5);

    let out = ok(
        d,
        &[
            "eval",
            "--pred",
            "pred.json",
            "--gt",
            "scene.json",
            "--out",
            "report.json",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("PCK_rel"));
    let r = json(&d.join("report.json"));
    assert_eq!(r["report"]["recall"], 100.0);
    assert!(r["report"]["mpjpe_mm"].as_f64().unwrap() < 20.0);
    assert_eq!(r["report"]["config"]["pck_threshold"], 150.0);
}

#[test]
fn decode_falls_back_to_recorded_camera() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.json"), SMALL).unwrap();
    ok(d, &["synth", "--config", "c.json", "--out", "scene.json"]);
    ok(d, &["encode", "--scene", "scene.json", "--out", "s.smap"]);
    ok(d, &["decode", "--stack", "s.smap", "--out", "a.json"]);
    ok(
        d,
        &[
            "decode",
            "--stack",
            "s.smap",
            "--camera",
            "scene.json",
            "--out",
            "b.json",
        ],
    );
    assert_eq!(json(&d.join("a.json"))["people"], json(&d.join("b.json"))["people"]);
    fs::remove_file(d.join("s.smap.json")).unwrap();
    assert_eq!(
        depthpose(d, &["decode", "--stack", "s.smap", "--out", "c.json"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn eval_of_ground_truth_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.json"), SMALL).unwrap();
    ok(d, &["synth", "--config", "c.json", "--out", "gt.json"]);
    ok(d, &["eval", "--pred", "gt.json", "--gt", "gt.json", "--out", "r.json"]);
    let r = &json(&d.join("r.json"))["report"];
    for key in ["recall", "mpjpe_mm", "rt_error_mm", "pcod"] {
        let want = if key.ends_with("mm") { 0.0 } else { 100.0 };
        assert_eq!(r[key], want, "{key}");
    }
    for key in ["pck_rel", "pck_abs", "pck_root", "auc_rel"] {
        assert_eq!(r[key]["matched"], 100.0, "{key}");
        assert_eq!(r[key]["all"], 100.0, "{key}");
    }
}

#[test]
fn roundtrip_is_byte_identical_across_runs_and_pool_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = format!(
        r#"{{"synth": {}}}"#,
        SMALL.replace("\"seed\": 5", "\"seed\": 5, \"frames\": 4")
    );
    fs::write(d.join("c.json"), cfg).unwrap();
    ok(
        d,
        &["roundtrip", "--config", "c.json", "--report", "a.json", "--jobs", "1"],
    );
    ok(
        d,
        &["roundtrip", "--config", "c.json", "--report", "b.json", "--jobs", "3"],
    );
    let a = fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, fs::read(d.join("b.json")).unwrap());
    let r = json(&d.join("a.json"));
    assert_eq!(r["report"]["pcod"], 100.0);
    assert_eq!(r["report"]["counts"]["frames"], 4);
    assert_eq!(r["provenance"]["config"]["assoc"]["lambda"], 1.5);
    assert_eq!(r["provenance"]["config"]["method"], "dapa");
}

#[test]
fn default_roundtrip_orders_people_correctly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("c.json"), r#"{"synth": {"people": [3, 5], "frames": 2}}"#).unwrap();
    ok(d, &["roundtrip", "--config", "c.json", "--report", "r.json"]);
    assert_eq!(json(&d.join("r.json"))["report"]["pcod"], 100.0);
}

#[test]
fn bench_reports_timings() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["bench", "--people", "4", "--repeat", "3", "--out", "b.json"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 people, 4 grouped"));
    let b = json(&d.join("b.json"));
    assert_eq!(b["times_ms"].as_array().unwrap().len(), 3);
    assert_eq!(b["provenance"]["method"], "dapa");
}

#[test]
fn usage_and_input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = depthpose(d, &["encode", "--scene", "s.json", "--out", "x", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(depthpose(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        depthpose(d, &["decode", "--stack", "x", "--out", "y", "--assoc", "3dpa"])
            .status
            .code(),
        Some(1)
    );

    assert_eq!(
        depthpose(d, &["encode", "--scene", "missing.json", "--out", "x"])
            .status
            .code(),
        Some(1)
    );

    fs::write(
        d.join("bad.json"),
        r#"{"format": "depthpose-scene", "version": 1, "camera": {"f": "wide"}}"#,
    )
    .unwrap();
    let out = depthpose(d, &["encode", "--scene", "bad.json", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("camera"));

    fs::write(d.join("junk.smap"), b"SMAPjunk").unwrap();
    let out = depthpose(
        d,
        &["decode", "--stack", "junk.smap", "--camera", "bad.json", "--out", "y"],
    );
    assert_eq!(out.status.code(), Some(1));

    fs::write(d.join("c.json"), r#"{"people": [3, 1]}"#).unwrap();
    assert_eq!(
        depthpose(d, &["synth", "--config", "c.json", "--out", "s.json"])
            .status
            .code(),
        Some(1)
    );
    fs::write(d.join("c.json"), r#"{"synth": {}, "typo": 1}"#).unwrap();
    assert_eq!(
        depthpose(d, &["roundtrip", "--config", "c.json", "--report", "r.json"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = depthpose(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["synth", "encode", "decode", "eval", "roundtrip", "bench"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}
