use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn hkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkit")).current_dir(dir).args(args).output().expect("spawn hkit")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = hkit(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn error_of(out: &Output) -> Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str::<Value>(line.trim()).unwrap()["error"].clone()
}

#[test]
fn circle_lift_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["generate", "--kind", "circle", "--n", "4096", "--out", "in/circle.csv"]);
    ok(d, &["lift", "--planar", "in/circle.csv", "--t0", "0", "--out", "lift/hpath.csv"]);
    let summary = json(d.join("lift/lift_summary.json"));
    let h = summary["final_height"].as_f64().unwrap();
    assert!((h + 4.0 * std::f64::consts::PI).abs() < 1e-6, "{h}");

    let m = json(d.join("lift/manifest.json"));
    assert_eq!(m["config"]["command"], "lift");
    assert_eq!(m["timing_file"], "timing.json");
    assert_eq!(m["inputs"][0]["path"], "in/circle.csv");
    for o in m["outputs"].as_array().unwrap() {
        let bytes = fs::read(d.join("lift").join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["bytes"].as_u64().unwrap(), bytes.len() as u64);
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(o["sha256"].as_str().unwrap(), digest);
    }
    assert!(json(d.join("lift/timing.json"))["wall_seconds"].is_number());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let args = ["generate", "--kind", "weierstrass", "--gamma", "0.7", "--n", "2048", "--seed", "5", "--out", "w/p.csv"];
    ok(d, &args);
    let first = (fs::read(d.join("w/p.csv")).unwrap(), fs::read(d.join("w/manifest.json")).unwrap());
    ok(d, &args);
    let second = (fs::read(d.join("w/p.csv")).unwrap(), fs::read(d.join("w/manifest.json")).unwrap());
    assert_eq!(first, second);
    ok(d, &["--threads", "1", "generate", "--kind", "weierstrass", "--gamma", "0.7", "--n", "2048", "--seed", "5", "--out", "w1/p.csv"]);
    assert_eq!(fs::read(d.join("w1/p.csv")).unwrap(), first.0);
}

#[test]
fn young_both_methods_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["generate", "--kind", "weierstrass", "--gamma", "0.6", "--n", "4096", "--seed", "1", "--out", "f.csv"]);
    ok(d, &["generate", "--kind", "weierstrass", "--gamma", "0.6", "--n", "4096", "--seed", "2", "--out", "g.csv"]);
    ok(d, &["young", "--method", "both", "--in", "f.csv", "--in2", "g.csv", "--out", "y/result.json"]);
    let r = json(d.join("y/result.json"));
    assert_eq!(r["within_estimates"], true);
    let (a, b) = (r["rs"]["value"].as_f64().unwrap(), r["mollified"]["value"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-3 * a.abs(), "{a} {b}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let out = hkit(d, &["lift", "--planar", "missing.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_of(&out)["kind"], "io");

    let out = hkit(d, &["lift", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["exit_code"], 2);

    ok(d, &["generate", "--kind", "weierstrass", "--n", "256", "--out", "f.csv"]);
    let out = hkit(d, &["young", "--method", "rs", "--alpha", "0.4", "--beta", "0.5", "--in", "f.csv", "--in2", "f.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(error_of(&out)["message"].as_str().unwrap().contains("Young condition violated"));

    fs::write(d.join("bad.json"), r#"{"command":"lift","params":{"planar":"f.csv","speed":1},"output_dir":"o"}"#).unwrap();
    let out = hkit(d, &["run", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "parse");
}

#[test]
fn config_file_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = r#"{"command":"generate","params":{"kind":"circle","n":512,"radius":1.0},"seed":0,"output_dir":"c"}"#;
    fs::write(d.join("cfg.json"), cfg).unwrap();
    ok(d, &["run", "--config", "cfg.json", "--param", "radius=2", "--param", "output_dir=c2"]);
    let m = json(d.join("c2/manifest.json"));
    assert_eq!(m["config"]["params"]["radius"], 2);
    let text = fs::read_to_string(d.join("c2/circle.csv")).unwrap();
    let first = text.lines().find(|l| !l.starts_with('#') && !l.starts_with('t')).unwrap();
    let row: Vec<f64> = first.split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row, [0.0, 2.0, 0.0]);
}

#[test]
fn hodge_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // w = cos(2π x) dx + 3 dy on T², split by hand: exact part cos(2πx) dx, harmonic 3 dy
    let form = r#"{"k":2,"l":1,"M":1,"components":{
        "1":[[0,0],[0,0],[0,0], [0,0],[0,0],[0,0], [0,0],[0,0],[0,0]],
        "2":[[0,0],[0,0],[0,0], [0,0],[3,0],[0,0], [0,0],[0,0],[0,0]]}}"#;
    let mut v: Value = serde_json::from_str(form).unwrap();
    // ξ = (±1, 0) sits at slots 1 and 7 in row-major order over {-1, 0, 1}²
    v["components"]["1"][1] = serde_json::json!([0.5, 0.0]);
    v["components"]["1"][7] = serde_json::json!([0.5, 0.0]);
    fs::write(d.join("w.json"), v.to_string()).unwrap();
    let out = hkit(d, &["hodge", "--in", "w.json", "--out", "h/split.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(d.join("h/split.json"));
    let rep = &s["report"];
    assert!(rep["reconstruction"].as_f64().unwrap() < 1e-12);
    let harmonic = &s["harmonic"]["components"];
    let re = |c: &Value, comp: &str, slot: usize| c[comp][slot][0].as_f64().unwrap();
    assert!((re(harmonic, "2", 4) - 3.0).abs() < 1e-14);
    assert!(re(harmonic, "1", 1).abs() < 1e-14);
    let dp = &s["d_part"]["components"];
    assert!((re(dp, "1", 1) - 0.5).abs() < 1e-14 && (re(dp, "1", 7) - 0.5).abs() < 1e-14);
    assert!(s["delta_part"]["components"]["1"].as_array().unwrap().iter().all(|z| z[0] == 0.0 && z[1] == 0.0));
}

#[test]
fn verify_filter_and_tampered_tolerances() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let stdout = ok(d, &["verify", "--filter", "heisenberg", "--out-dir", "v"]);
    let rows: Vec<&str> = stdout.lines().filter(|l| l.starts_with('[')).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("[PASS] C03"));
    assert_eq!(json(d.join("v/manifest.json"))["all_passed"], true);

    fs::write(d.join("tol.json"), r#"{"metric.left_invariance": -1}"#).unwrap();
    let out = hkit(d, &["verify", "--filter", "C03", "--tolerances", "tol.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[FAIL] C03"), "{stdout}");
    assert!(stdout.contains("left_invariance"));

    fs::write(d.join("tol2.json"), r#"{"metric.nonsense": 1}"#).unwrap();
    let out = hkit(d, &["verify", "--filter", "C03", "--tolerances", "tol2.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = hkit(d, &["verify", "--filter", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
}
