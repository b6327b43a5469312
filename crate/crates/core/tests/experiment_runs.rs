//! End-to-end runs of small experiments through the file-writing path.

use std::fs;

use ews_core::experiment::{parse_config, read_table, run_experiment, Cell, TableFormat};

const CONFIG: &str = r#"name = "roundtrip"

[system]
variant = "cable_periodic"
dx = 0.0625

[sweep]
swept = "p"
values = [1.0, 0.5, 0.25]
horizon = 400
n_samples = 3
root_seed = 5

[probes]
names = ["e_1", "e_2", "noise_1"]

[output]
formats = ["csv", "jsonl"]
"#;

fn config_in(dir: &std::path::Path) -> ews_core::experiment::ExperimentConfig {
    let mut c = parse_config(CONFIG).unwrap();
    c.output.directory = Some(dir.to_path_buf());
    c
}

#[test]
fn tables_on_disk_match_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_experiment(&config_in(tmp.path())).unwrap();
    for format in [TableFormat::Csv, TableFormat::Jsonl] {
        let sweep = read_table(&tmp.path().join(format!("sweep.{}", format.extension())), format).unwrap();
        assert_eq!(sweep, report.sweep_table);
        let verdicts = read_table(&tmp.path().join(format!("verdicts.{}", format.extension())), format).unwrap();
        assert_eq!(verdicts, report.verdicts_table);
    }
    let header = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let first = header.lines().next().unwrap();
    assert_eq!(
        first,
        "swept_value,e_1_mean_log10,e_1_std_log10,e_2_mean_log10,e_2_std_log10,noise_1_mean_log10,noise_1_std_log10"
    );
    assert!(!header.contains('\r'));
    assert_eq!(report.sweep_table.rows.len(), 3);
    assert_eq!(report.sweep_table.rows[0][0], Cell::Num(1.0));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["root_seed"], 5);
    assert_eq!(manifest["config"]["sweep"]["n_samples"], 3);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    let script = fs::read_to_string(tmp.path().join("plot.py")).unwrap();
    assert!(script.contains("sweep.csv"));
}

#[test]
fn manifest_config_regenerates_identical_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_experiment(&config_in(&a)).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let mut echoed: ews_core::experiment::ExperimentConfig =
        serde_json::from_value(manifest["config"].clone()).unwrap();
    echoed.output.directory = Some(b.clone());
    run_experiment(&echoed).unwrap();
    for name in [
        "sweep.csv",
        "fits.csv",
        "verdicts.csv",
        "sweep.jsonl",
        "fits.jsonl",
        "verdicts.jsonl",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn modal_and_full_cable_runs_agree_statistically() {
    let tmp = tempfile::tempdir().unwrap();
    let mut full = config_in(&tmp.path().join("full"));
    full.sweep.horizon = 4000.0;
    full.sweep.n_samples = 4;
    let mut modal = full.clone();
    modal.sweep.resolution = ews_core::sweep::Resolution::Modal;
    modal.output.directory = Some(tmp.path().join("modal"));
    let f = run_experiment(&full).unwrap();
    let m = run_experiment(&modal).unwrap();
    for (rf, rm) in f.results[0].1.rows.iter().zip(&m.results[0].1.rows) {
        for (ef, em) in rf.estimates.iter().zip(&rm.estimates) {
            let spread = ef.std_log10.max(em.std_log10).max(0.02);
            assert!((ef.mean_log10 - em.mean_log10).abs() < 4.0 * spread, "{ef:?} vs {em:?}");
        }
    }
}
