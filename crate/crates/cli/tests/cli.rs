use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hillspec"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hillspec-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn schema(name: &str) -> JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::compile(&value).unwrap()
}

fn check(schema_name: &str, file: &Path) -> Value {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    let s = schema(schema_name);
    if let Err(errors) = s.validate(&doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{} fails {schema_name}: {msgs:?}", file.display());
    }
    doc
}

#[test]
fn artifacts_match_their_schemas() {
    let cases: [(&[&str], &str, &str); 6] = [
        (&["spectra", "--preset", "mathieu:0.5", "--kmax", "3"], "spectra", "spectra.json"),
        (&["portrait", "--preset", "mathieu:0.5", "--kmax", "3"], "portrait", "portrait.json"),
        (&["criterion", "--preset", "gasymov:1", "--kmax", "3"], "criterion", "criterion.json"),
        (&["project", "--preset", "mathieu:2", "--kmax", "2", "--cells", "2", "--bump", "1.0,0.4"], "projection", "projection.json"),
        (&["greens", "--preset", "mathieu:0.4", "--z", "-2,0.5", "--points", "5"], "greens", "greens.json"),
        (&["validate", "--preset", "zero", "--kmax", "2"], "validate", "validate.json"),
    ];
    for (i, (args, name, file)) in cases.iter().enumerate() {
        let dir = scratch(&format!("schema{i}"));
        let out = bin().args(*args).arg("--out").arg(&dir).output().unwrap();
        assert!(out.status.code().is_some_and(|c| c <= 1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        check(name, &dir.join(file));
        check("run_config", &dir.join("run_config.json"));
        let _ = std::fs::remove_dir_all(&dir);
    }
}

#[test]
fn expansion_artifact_matches_schema() {
    let dir = scratch("expand");
    let out = bin()
        .args(["expand", "--preset", "zero", "--band-max", "2", "--cells", "2", "--allow-fail", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = check("expansion", &dir.join("expansion.json"));
    assert!(doc["verdict"].is_null());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn criterion_exit_code_encodes_the_verdict() {
    assert_eq!(run(&["criterion", "--preset", "zero", "--kmax", "3"]).status.code(), Some(0));
    assert_eq!(run(&["criterion", "--preset", "gasymov:1", "--kmax", "3"]).status.code(), Some(1));
}

#[test]
fn configuration_errors_exit_64() {
    for args in [
        &["spectra", "--kmax", "0"][..],
        &["spectra", "--preset", "nonsense"],
        &["spectra", "--no-such-flag"],
        &["greens", "--range", "3,1"],
        &["spectra", "--config", "/nonexistent/run.json"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn numerical_errors_exit_65_with_kind() {
    let out = run(&["expand", "--preset", "gasymov:1", "--band-max", "2", "--cells", "1"]);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[ExpansionRefused]"));
}

#[test]
fn csv_format_goes_to_stdout() {
    let out = run(&["greens", "--points", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,re,im"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn run_config_reproduces_the_run() {
    let a = scratch("cfg-a");
    let b = scratch("cfg-b");
    let first = bin().args(["spectra", "--preset", "mathieu:0.3+0.1i", "--kmax", "2", "--out"]).arg(&a).output().unwrap();
    assert_eq!(first.status.code(), Some(0));
    let second = bin().arg("spectra").arg("--config").arg(a.join("run_config.json")).arg("--out").arg(&b).output().unwrap();
    assert_eq!(second.status.code(), Some(0), "{}", String::from_utf8_lossy(&second.stderr));
    for f in ["spectra.json", "spectra.csv", "run_config.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["portrait", "--preset", "mathieu:0.5", "--kmax", "3"];
    let one = bin().args(args).env("HILL_THREADS", "1").output().unwrap();
    let many = bin().args(args).env("HILL_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(bin().args(args).env("HILL_THREADS", "zero").output().unwrap().status.code(), Some(64));
}

#[test]
fn potential_file_input() {
    let dir = scratch("potfile");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("v.json");
    std::fs::write(&file, r#"{"fourier": {"1": [0.5, 0.0], "-1": [0.5, 0.0]}}"#).unwrap();
    let a = bin().arg("spectra").arg("--potential-file").arg(&file).args(["--kmax", "2"]).output().unwrap();
    let b = run(&["spectra", "--preset", "mathieu:0.5", "--kmax", "2"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let ca: Value = serde_json::from_slice(&a.stdout).unwrap();
    let cb: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(ca["catalog"], cb["catalog"]);
    let _ = std::fs::remove_dir_all(&dir);
}
