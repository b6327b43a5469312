use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ews(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ews"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"name = "small"

[system]
variant = "jordan_chain"
dim = 2

[sweep]
swept = "kappa"
values = [1.0, 0.5, 0.25]
horizon = 300
n_samples = 3
root_seed = 7

[output]
formats = ["csv", "jsonl"]
"#;

#[test]
fn preset_list_and_print() {
    let o = ews(&["preset", "--list"]);
    assert!(o.status.success());
    let names = stdout(&o);
    for panel in ["fig1a", "fig1d", "fig2a", "fig2d", "fig1a-desk", "fig2d-desk"] {
        assert!(names.lines().any(|l| l == panel), "{panel} missing");
    }
    let o = ews(&["preset", "fig2b", "--print"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("variant = \"jordan_chain\""));
    let o = ews(&["preset", "fig9z", "--print"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown preset"));
}

#[test]
fn validate_reports_the_offending_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, SMALL).unwrap();
    let o = ews(&["validate", good.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("3 values x 3 samples"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[system]\nvariant = \"jordan_chain\"\np = 0.5\n").unwrap();
    let o = ews(&["validate", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn oracle_prints_named_values() {
    let o = ews(&["oracle", "scalar", "p=-0.5", "kappa=2"]);
    assert!(o.status.success());
    let line = stdout(&o);
    let v: f64 = line.trim().strip_prefix("variance = ").unwrap().parse().unwrap();
    assert!((v - 2.0e-3).abs() < 1e-15, "{line}");
    let o = ews(&["oracle", "multiplication", "alpha=2", "p=-0.001"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let vals: Vec<f64> = out
        .lines()
        .map(|l| l.split(" = ").nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 2);
    assert!((vals[0] / vals[1] - 1.0).abs() < 1e-6);
    assert!(!ews(&["oracle", "scalar", "kappa=-1"]).status.success());
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let one = dir.path().join("one");
    let many = dir.path().join("many");
    let o = ews(&[
        "run",
        cfg.to_str().unwrap(),
        "--threads",
        "1",
        "--out",
        one.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o)
        .lines()
        .any(|l| l.trim_start().starts_with("e_1") && l.contains("slope")));
    let o = Command::new(env!("CARGO_BIN_EXE_ews"))
        .args(["run", cfg.to_str().unwrap(), "--out", many.to_str().unwrap()])
        .env("EWS_THREADS", "4")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let a = read_outputs(&one);
    let b = read_outputs(&many);
    let names: Vec<_> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "fits.csv",
            "fits.jsonl",
            "plot.py",
            "sweep.csv",
            "sweep.jsonl",
            "verdicts.csv",
            "verdicts.jsonl"
        ]
    );
    assert_eq!(a, b);
    let manifest = fs::read_to_string(one.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"root_seed\": 7"));
}

#[test]
fn seed_override_changes_the_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(ews(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()])
        .status
        .success());
    let o = ews(&[
        "run",
        cfg.to_str().unwrap(),
        "--seed",
        "8",
        "--samples",
        "2",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(
        fs::read(a.join("sweep.csv")).unwrap(),
        fs::read(b.join("sweep.csv")).unwrap()
    );
    let manifest = fs::read_to_string(b.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"root_seed\": 8") && manifest.contains("\"n_samples\": 2"));
}
