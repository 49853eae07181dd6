use std::fs;
use std::path::Path;
use std::process::Command;

use hjsing_cli::{parse_config, run_scenario, sha256_hex, CliError, Manifest, Task};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_hjsing");

const FUNDAMENTAL: &str = r#"
task = "fundamental"

[model]
id = "free"
dim = 2

[options]
x = [0.0, 0.0]
y = [1.0, 0.0]
t = 0.5
"#;

const TRACE: &str = r#"
[model]
id = "eikonal"

[field]
id = "two_source_eikonal"
a = [-1.0, 0.0]
b = [1.0, 0.0]

[options]
x = [0.0, 1.0]
horizon = 2.0
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn hjsing(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read_report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn fundamental_free_particle_reports_unit_value() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "f.toml", FUNDAMENTAL);
    let out = tmp.path().join("out");
    let o = hjsing(&[
        "fundamental",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = read_report(&out);
    let value = report["result"]["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() < 1e-10, "value {value}");
    assert_eq!(report["status"], "ok");
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("s,x1,x2,v1,v2,p1,p2,energy\n"));
}

#[test]
fn trace_two_source_writes_monotone_arc() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.toml", TRACE);
    let out = tmp.path().join("out");
    let o = hjsing(&[
        "trace",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let arc = fs::read_to_string(out.join("arc.csv")).unwrap();
    let times = csv_column(&arc, "time");
    assert!(times.len() > 10);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert!((times.last().unwrap() - 2.0).abs() < 1e-12);
    for x1 in csv_column(&arc, "x1") {
        assert!(x1.abs() < 1e-6);
    }
    assert_eq!(read_report(&out)["result"]["stopped_reason"], "horizon");
}

#[test]
fn weakkam_pendulum_critical_value() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "w.toml",
        "[model]\nid = \"pendulum\"\n\n[options]\nresolution = 512\n",
    );
    let out = tmp.path().join("out");
    let o = hjsing(&[
        "weakkam",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let c = read_report(&out)["result"]["c"].as_f64().unwrap();
    assert!((c - 1.0).abs() < 1e-3, "c = {c}");
    let grid = fs::read_to_string(out.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 513);
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = parse_config(TRACE).unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let ra = run_scenario(&cfg, Task::Trace, TRACE, &a).unwrap();
    let rb = run_scenario(&cfg, Task::Trace, TRACE, &b).unwrap();
    assert_eq!(ra.exit_code, 0);
    assert_eq!(ra.manifest, rb.manifest);
    assert_eq!(
        fs::read(a.join("arc.csv")).unwrap(),
        fs::read(b.join("arc.csv")).unwrap()
    );
}

#[test]
fn manifest_lists_every_written_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "t.toml", TRACE);
    let out = tmp.path().join("out");
    let o = hjsing(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
        "--threads",
        "1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let manifest = read_manifest(&out);
    assert_eq!(manifest.version, hjsing_core::VERSION);
    assert_eq!(manifest.config_sha256, sha256_hex(TRACE.as_bytes()));
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let listed: Vec<String> = manifest.files.iter().map(|f| f.path.clone()).collect();
    assert_eq!(listed, on_disk);
    for f in &manifest.files {
        let bytes = fs::read(out.join(&f.path)).unwrap();
        assert_eq!(f.sha256, sha256_hex(&bytes));
        assert_eq!(f.bytes, bytes.len() as u64);
    }
    assert_eq!(read_report(&out)["options"]["seed"], 3);
}

#[test]
fn failed_certificate_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let text = TRACE.replace("horizon = 2.0", "horizon = 0.5\ntol = 1e-12");
    let cfg = write(tmp.path(), "c.toml", &text);
    let out = tmp.path().join("out");
    let o = hjsing(&[
        "certify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let report = read_report(&out);
    assert_eq!(report["status"], "certified_failure");
    assert_eq!(report["result"]["inclusion"]["passed"], false);
}

#[test]
fn solver_error_is_reported_with_exit_one() {
    let tmp = TempDir::new().unwrap();
    let text = TRACE.replace("x = [0.0, 1.0]", "x = [0.5, 1.0]");
    let cfg = write(tmp.path(), "e.toml", &text);
    let out = tmp.path().join("out");
    let o = hjsing(&[
        "trace",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report = read_report(&out);
    assert_eq!(report["status"], "error");
    assert!(report["error"]["message"]
        .as_str()
        .unwrap()
        .contains("not singular"));
    let manifest = read_manifest(&out);
    assert_eq!(manifest.files.len(), 1);
}

fn config_error_path(text: &str, task: Task) -> String {
    let err = parse_config(text).and_then(|c| c.validate(task).map(|_| ()));
    match err {
        Err(CliError::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let bad = FUNDAMENTAL.replace("t = 0.5", "t = 0.5\ntolerance = 1e-3");
    assert_eq!(
        config_error_path(&bad, Task::Fundamental),
        "options.tolerance"
    );
    // the fixture table is tagged by `id`, so the path stops at the table
    let bad = TRACE.replace("b = [1.0, 0.0]", "b = [1.0, 0.0]\nc = [0.0, 0.0]");
    match parse_config(&bad) {
        Err(CliError::Config { path, message }) => {
            assert_eq!(path, "field");
            assert!(message.contains("`c`"), "{message}");
        }
        other => panic!("expected a config error, got {other:?}"),
    }
    assert_eq!(config_error_path("colour = 1\n", Task::Trace), "colour");
}

#[test]
fn invalid_values_are_rejected() {
    let neg = FUNDAMENTAL.replace("t = 0.5", "t = -0.5");
    assert_eq!(config_error_path(&neg, Task::Fundamental), "options.t");
    let model = FUNDAMENTAL.replace("id = \"free\"", "id = \"nonesuch\"");
    assert_eq!(config_error_path(&model, Task::Fundamental), "model");
    let fixture = TRACE.replace("two_source_eikonal", "three_source");
    assert_eq!(config_error_path(&fixture, Task::Trace), "field.id");
    assert_eq!(config_error_path(FUNDAMENTAL, Task::Trace), "task");
    let dims = FUNDAMENTAL.replace("y = [1.0, 0.0]", "y = [1.0]");
    assert_eq!(config_error_path(&dims, Task::Fundamental), "options.y");
}

#[test]
fn registries_are_listed() {
    let o = hjsing(&["list-models"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "pendulum"));
    let o = hjsing(&["list-fixtures"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "neg_abs_1d"));
}

#[test]
fn classify_and_supconv_run() {
    let tmp = TempDir::new().unwrap();
    let text = TRACE.replace("horizon = 2.0", "t = 0.1");
    let cfg = parse_config(&text).unwrap();
    let r = run_scenario(&cfg, Task::Classify, &text, &tmp.path().join("c")).unwrap();
    assert_eq!(r.exit_code, 0);
    assert_eq!(r.report["result"]["singular"], true);
    let r = run_scenario(&cfg, Task::Supconv, &text, &tmp.path().join("s")).unwrap();
    assert_eq!(r.exit_code, 0);
    let y = &r.report["result"]["y"];
    assert!(y[0].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn probe_reports_verdict() {
    let tmp = TempDir::new().unwrap();
    let text = FUNDAMENTAL.replace("task = \"fundamental\"", "");
    let text = text.replace("t = 0.5", "t = 0.5\nsamples = 8\nlambda = 2.0");
    let cfg = parse_config(&text).unwrap();
    let r = run_scenario(&cfg, Task::Probe, &text, tmp.path()).unwrap();
    assert_eq!(r.exit_code, 0);
    assert_eq!(r.report["result"]["verdict"], true);
    let c = r.report["result"]["constant_estimate"].as_f64().unwrap();
    assert!((c - 1.0).abs() < 1e-6, "free particle constant {c}");
}
