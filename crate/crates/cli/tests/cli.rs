use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn lineament(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lineament"))
        .args(args)
        .env_remove("LINEAMENT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A small scene keeps debug-build runs quick.
fn small_spec(dir: &Path) -> std::path::PathBuf {
    let spec = json!({
        "width": 160, "height": 160, "bands": 4,
        "segments": [
            {"center": [80.0, 40.0], "azimuth": 105.0, "length": 110.0, "contrast": 0.25},
            {"center": [50.0, 110.0], "azimuth": 20.0, "length": 70.0, "contrast": 0.25}
        ],
        "noise_sigma": 0.0196, "dem_tilt": 0.1,
        "stream": {"path": [[-1.0, 140.0], [160.0, 130.0]], "side_slope": 0.5, "contrast": 0.25},
        "occurrences": 12, "pixel_size": 30.0
    });
    let path = dir.join("spec.json");
    fs::write(&path, spec.to_string()).unwrap();
    path
}

fn synth(dir: &Path) -> std::path::PathBuf {
    let spec = small_spec(dir);
    let scene = dir.join("scene");
    let o = lineament(&["synth", "--out", p(&scene), "--seed", "9", "--spec", p(&spec)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    scene
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn synth_then_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    for f in ["scene.bsq", "scene.hdr.json", "dem.asc", "occurrences.csv", "truth.geojson", "run.cfg"] {
        assert!(scene.join(f).exists(), "{f} missing");
    }
    let o = lineament(&["run", "--config", p(&scene.join("run.cfg"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = scene.join("run");
    for f in [
        "lineaments.geojson",
        "lineaments_raw.geojson",
        "streams.asc",
        "density.asc",
        "rose.csv",
        "correlation.csv",
        "report.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let r = report(&out);
    assert_eq!(r["parameters"]["edge_gradient"], "50");
    assert!(r["counts"]["lineaments_raw"].as_u64().unwrap() >= r["counts"]["lineaments_final"].as_u64().unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    let cfg = scene.join("run.cfg");
    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("edge_gradient = 60\ncurve_length = 30\n");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let o = lineament(&["run", "--config", p(&cfg), "--edge_gradient", "40", "--output_dir", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["parameters"]["edge_gradient"], "40");
    assert_eq!(r["parameters"]["curve_length"], "30");
    assert!(r["warnings"][0].as_str().unwrap().contains("non-default for mode"));
}

#[test]
fn echoed_parameters_reproduce_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    let first = scene.join("run");
    assert_eq!(code(&lineament(&["run", "--config", p(&scene.join("run.cfg")), "--mode", "laplacian"])), 0);
    let params = report(&first)["parameters"].as_object().unwrap().clone();
    let second = dir.path().join("second");
    let mut text = String::new();
    for (k, v) in &params {
        let v = if k == "output_dir" { p(&second) } else { v.as_str().unwrap() };
        text.push_str(&format!("{k} = {v}\n"));
    }
    let cfg = dir.path().join("echo.cfg");
    fs::write(&cfg, text).unwrap();
    let o = lineament(&["run", "--config", p(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["lineaments.geojson", "density.asc", "rose.csv", "correlation.csv"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn stagewise_commands_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    assert_eq!(code(&lineament(&["run", "--config", p(&scene.join("run.cfg"))])), 0);
    let st = dir.path().join("stages");
    let dem = scene.join("dem.asc");
    let steps: Vec<Vec<String>> = vec![
        vec!["dimred".into(), "--input".into(), p(&scene.join("scene.bsq")).into()],
        vec!["extract".into(), "--image".into(), p(&st.join("component.asc")).into()],
        vec!["hydro".into(), "--lineaments".into(), p(&st.join("lineaments_raw.geojson")).into(), "--dem".into(), p(&dem).into()],
        vec![
            "analyze".into(),
            "--lineaments".into(),
            p(&st.join("lineaments.geojson")).into(),
            "--dem".into(),
            p(&dem).into(),
            "--occurrences".into(),
            p(&scene.join("occurrences.csv")).into(),
        ],
    ];
    for mut step in steps {
        step.extend(["--output_dir".into(), p(&st).into()]);
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        let o = lineament(&args);
        assert_eq!(code(&o), 0, "{:?}: {}", step[0], String::from_utf8_lossy(&o.stderr));
    }
    for f in ["lineaments_raw.geojson", "lineaments.geojson", "streams.asc", "density.asc", "rose.csv", "correlation.csv"] {
        assert_eq!(
            fs::read(scene.join("run").join(f)).unwrap(),
            fs::read(st.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn score_of_truth_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    let truth = scene.join("truth.geojson");
    let o = lineament(&["score", "--found", p(&truth), "--truth", p(&truth), "--reference", p(&scene.join("dem.asc"))]);
    assert_eq!(code(&o), 0);
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["recall_len"], 1.0);
    assert_eq!(s["precision_len"], 1.0);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    let cfg = scene.join("run.cfg");
    assert_eq!(code(&lineament(&["run", "--config", p(&cfg), "--edge_gradient", "300"])), 1);
    assert_eq!(code(&lineament(&["run", "--config", p(&cfg), "--curve_length", "5"])), 1);
    assert_eq!(code(&lineament(&["run"])), 1, "missing input");
    assert_eq!(code(&lineament(&["run", "--no-such-flag"])), 1);
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "unknown_key = 3\n").unwrap();
    assert_eq!(code(&lineament(&["run", "--config", p(&bad)])), 1);
    fs::write(&bad, "edge_gradient 50\n").unwrap();
    assert_eq!(code(&lineament(&["run", "--config", p(&bad)])), 1, "line without `=`");
    let o = Command::new(env!("CARGO_BIN_EXE_lineament"))
        .args(["synth", "--out", p(&dir.path().join("x"))])
        .env("LINEAMENT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn force_admits_out_of_range_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    let out = dir.path().join("forced");
    let o = lineament(&[
        "run",
        "--config",
        p(&scene.join("run.cfg")),
        "--edge_gradient",
        "80",
        "--force",
        "--output_dir",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["parameters"]["edge_gradient"], "80");
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.bsq");
    assert_eq!(code(&lineament(&["run", "--input", p(&missing)])), 2);
    let garbage = dir.path().join("garbage.asc");
    fs::write(&garbage, "not a grid\n").unwrap();
    let o = lineament(&["extract", "--image", p(&garbage), "--output_dir", p(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scene = synth(dir.path());
    let cfg = scene.join("run.cfg");
    let (a, b) = (dir.path().join("t1"), dir.path().join("t3"));
    assert_eq!(code(&lineament(&["--threads", "1", "run", "--config", p(&cfg), "--output_dir", p(&a)])), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_lineament"))
        .args(["run", "--config", p(&cfg), "--output_dir", p(&b)])
        .env("LINEAMENT_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    for f in ["lineaments.geojson", "streams.asc", "density.asc", "rose.csv", "correlation.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}
