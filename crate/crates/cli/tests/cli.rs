use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manifold-rbf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn definiteness_reports_psd_for_log_euclidean() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "definiteness",
            "--manifold",
            "spd",
            "--metric",
            "log-euclidean",
            "--dim",
            "3",
            "--gamma-grid",
            "0.01,0.1,1,10,100",
            "--m",
            "40",
            "--trials",
            "50",
            "--seed",
            "7",
        ],
    );
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["verdict"], "psd-within-tol");
    assert_eq!(v["provenance"]["seed"], 7);
}

#[test]
fn single_point_gram_is_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("one.json"),
        r#"{"kind":"spd","dim":2,"points":[[[2.0,0.5],[0.5,1.0]]]}"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "gram", "--input", "one.json", "--gamma", "1", "--output", "g.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn two_blobs_are_recovered_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let synth = run(
        p,
        &[
            "synth",
            "--kind",
            "spd-blobs",
            "--clusters",
            "2",
            "--per-cluster",
            "20",
            "--separation",
            "4",
            "--noise",
            "0.1",
            "--seed",
            "1",
            "--output",
            "blobs.json",
        ],
    );
    assert!(synth.status.success());
    let out = run(
        p,
        &[
            "cluster",
            "--input",
            "blobs.json",
            "--k",
            "2",
            "--output",
            "c.json",
        ],
    );
    assert!(out.status.success());
    let v = json(p, "c.json");
    assert_eq!(v["accuracy"].as_f64(), Some(1.0));
    let labels = v["result"]["labels"].as_array().unwrap();
    assert_eq!(labels.len(), 40);
    assert!(labels[..20].iter().all(|l| *l == labels[0]));
    assert!(labels[20..].iter().all(|l| *l == labels[20]));
    assert_ne!(labels[0], labels[20]);
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(p, &["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        run(p, &["gram", "--input", "missing.json"]).status.code(),
        Some(2)
    );
    std::fs::write(p.join("bad.json"), "{ not json").unwrap();
    assert_eq!(
        run(p, &["gram", "--input", "bad.json"]).status.code(),
        Some(2)
    );

    // A malformed Gram matrix is a data error.
    std::fs::write(p.join("k.csv"), "1,0.9\n0.1,1\n").unwrap();
    std::fs::write(p.join("y.json"), "[1,-1]").unwrap();
    assert_eq!(
        run(p, &["mkl-train", "--gram", "k.csv", "--labels", "y.json"])
            .status
            .code(),
        Some(2)
    );

    // Zero within-class scatter with no ridge is a numerical failure.
    std::fs::write(
        p.join("flat.json"),
        r#"{"kind":"euclidean","dim":1,"points":[[0.0],[0.0],[1.0],[1.0]],"labels":[0,0,1,1]}"#,
    )
    .unwrap();
    assert_eq!(
        run(p, &["kfda", "--input", "flat.json", "--ridge", "0"])
            .status
            .code(),
        Some(3)
    );

    std::fs::write(
        p.join("two.json"),
        r#"{"kind":"euclidean","dim":1,"points":[[0.0],[1.0]]}"#,
    )
    .unwrap();
    assert_eq!(
        run(p, &["cluster", "--input", "two.json", "--k", "5"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn svm_model_round_trips_through_predict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(run(
        p,
        &[
            "synth",
            "--kind",
            "rings",
            "--per-cluster",
            "30",
            "--noise",
            "0.1",
            "--output",
            "rings.json"
        ]
    )
    .status
    .success());
    assert!(run(
        p,
        &[
            "svm-train",
            "--input",
            "rings.json",
            "--gamma",
            "1",
            "--c",
            "10",
            "--output",
            "m.json"
        ]
    )
    .status
    .success());
    let out = run(
        p,
        &[
            "svm-predict",
            "--model",
            "m.json",
            "--input",
            "rings.json",
            "--output",
            "pred.json",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(p, "pred.json");
    assert!(v["accuracy"].as_f64().unwrap() >= 0.95);
    assert_eq!(v["predictions"].as_array().unwrap().len(), 60);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = ["synth", "--kind", "grassmann", "--seed", "3"];
    let a = run(p, &args).stdout;
    let b = run(p, &args).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
    std::fs::write(p.join("g.json"), &a).unwrap();
    let c1 = run(
        p,
        &[
            "cluster",
            "--input",
            "g.json",
            "--manifold",
            "grassmann",
            "--k",
            "3",
        ],
    )
    .stdout;
    let c2 = run(
        p,
        &[
            "cluster",
            "--input",
            "g.json",
            "--manifold",
            "grassmann",
            "--k",
            "3",
        ],
    )
    .stdout;
    assert_eq!(c1, c2);
}
