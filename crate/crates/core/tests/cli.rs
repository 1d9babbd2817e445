use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use egnn_core::io::FeatureTable;

fn egnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egnn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn egnn")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = egnn(args, cwd);
    assert!(
        out.status.success(),
        "egnn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Two-channel recordings at 128 Hz: class 1 carries a 10 Hz tone, class 2
/// a 20 Hz tone, both with a small deterministic ripple.
fn write_dataset(dir: &Path) {
    let mut entries = Vec::new();
    for (i, (label, freq)) in [(1, 10.0), (2, 20.0), (1, 10.0), (2, 20.0)].iter().enumerate() {
        let mut csv = String::from("AF3,AF4\n");
        for t in 0..(128 * 5) {
            let s = t as f64 / 128.0;
            let a = (2.0 * PI * freq * s).sin() + 0.1 * (2.0 * PI * 3.0 * s + i as f64).sin();
            let b = 0.5 * (2.0 * PI * freq * s).cos() + 0.05 * (t % 7) as f64;
            csv.push_str(&format!("{a},{b}\n"));
        }
        let file = format!("rec{i}.csv");
        std::fs::write(dir.join(&file), csv).unwrap();
        entries.push(format!(
            r#"{{"file":"{file}","subject":"S{}","game":"G{label}","label":{label}}}"#,
            i / 2 + 1
        ));
    }
    let manifest = format!(
        r#"{{"sample_rate":128,"channels":["AF3","AF4"],"recordings":[{}]}}"#,
        entries.join(",")
    );
    std::fs::write(dir.join("manifest.json"), manifest).unwrap();
}

#[test]
fn extract_rank_run_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_dataset(d);

    ok(&["extract", "--manifest", "manifest.json", "--window", "1", "--out", "f.csv"], d);
    let table = FeatureTable::load(&d.join("f.csv")).unwrap();
    assert_eq!(table.names.len(), 20);
    assert_eq!(table.names[0], "AF3_delta_max");
    assert_eq!(table.rows.len(), 20);
    assert_eq!(table.rows[5].subject, "S1");
    assert_eq!(table.rows[5].label, 2);

    ok(&["rank", "--features", "f.csv", "--out", "rank"], d);
    let ranking = std::fs::read_to_string(d.join("rank/ranking.csv")).unwrap();
    assert_eq!(ranking.lines().count(), 21);
    assert_eq!(std::fs::read_to_string(d.join("rank/band_sums.csv")).unwrap().lines().count(), 6);

    ok(
        &["run", "--features", "f.csv", "--ranking", "rank/ranking.json", "--n-features", "6", "--seed", "4", "--out", "run"],
        d,
    );
    for f in ["report.json", "trace.csv", "timing.csv", "model.json", "rules.json", "rules.txt"] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    let trace = std::fs::read_to_string(d.join("run/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 21);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["instances"], 20);
    assert_eq!(report["features"].as_array().unwrap().len(), 6);

    ok(&["report", "--run", "run", "--out", "plots", "--svg"], d);
    let curve = std::fs::read_to_string(d.join("plots/accuracy_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 21);
    assert!(d.join("plots/evolution.svg").exists());
    assert!(d.join("plots/confusion.csv").exists());
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--instances", "600", "--seed", "8", "--out", "s.csv"], d);
    ok(&["run", "--features", "s.csv", "--seed", "1", "--out", "a"], d);
    ok(&["run", "--features", "s.csv", "--seed", "1", "--out", "b"], d);
    for f in ["report.json", "trace.csv", "model.json", "rules.txt"] {
        assert_eq!(
            std::fs::read(d.join("a").join(f)).unwrap(),
            std::fs::read(d.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--instances", "200", "--seed", "2", "--out", "s.csv"], d);
    std::fs::write(
        d.join("cfg.json"),
        r#"{"features":"s.csv","seed":5,"output_dir":"out","hyper_params":{"rho0":0.3,"hr":50,"eta":2.0}}"#,
    )
    .unwrap();
    ok(&["run", "--config", "cfg.json", "--hr", "40"], d);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["hyper_params"]["hr"], 40);
    assert_eq!(report["hyper_params"]["rho0"], 0.3);
}

#[test]
fn sweeps_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_dataset(d);
    ok(&["extract", "--manifest", "manifest.json", "--out", "f.csv"], d);
    ok(
        &["sweep", "--features", "f.csv", "--k", "5", "--min-size", "10", "--rho0", "0.4,0.7", "--seed", "1", "--out", "lko"],
        d,
    );
    // 20 and 15 and 10 features, for two rho0 values
    let csv = std::fs::read_to_string(d.join("lko/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);

    ok(&["sweep", "--features", "f.csv", "--per-channel", "--seed", "1", "--out", "pc"], d);
    let csv = std::fs::read_to_string(d.join("pc/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains(",f,AF3,10,"), "{}", rows[0]);
    assert!(rows[1].contains(",f,AF4,10,"), "{}", rows[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(egnn(&["frobnicate"], d).status.code(), Some(1));
    assert_eq!(egnn(&["run", "--features", "x.csv", "--out", "o"], d).status.code(), Some(1));
    assert_eq!(egnn(&["run", "--features", "missing.csv", "--seed", "1", "--out", "o"], d).status.code(), Some(2));

    std::fs::write(d.join("bad.csv"), "subject,game,window,label,a\nS,G,0,1,oops\n").unwrap();
    let out = egnn(&["run", "--features", "bad.csv", "--seed", "1", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    ok(&["synth", "--instances", "10", "--seed", "1", "--out", "s.csv"], d);
    assert_eq!(egnn(&["run", "--features", "s.csv", "--seed", "1", "--rho0", "0", "--out", "o"], d).status.code(), Some(1));
    assert_eq!(egnn(&["run", "--features", "s.csv", "--seed", "1", "--no-normalize", "--out", "o"], d).status.code(), Some(0));
    assert_eq!(egnn(&["--help"], d).status.code(), Some(0));
}
