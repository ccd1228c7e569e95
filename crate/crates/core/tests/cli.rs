use std::path::Path;
use std::process::{Command, Output};

use eklf::report::read_report;

fn eklf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eklf")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_split_train_evaluate_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = d.join("g.txt");

    let out = eklf(&["generate", "--output", s(&g), "--nodes", "20", "--slots", "8", "--density", "0.1"]);
    assert!(out.status.success());
    assert!(d.join("g.txt.truth.json").exists());

    let out = eklf(&["split", "--input", s(&g), "--output", s(&d.join("p"))]);
    assert!(out.status.success());
    let sizes: Vec<usize> = ["train", "val", "test"]
        .iter()
        .map(|n| {
            let text = std::fs::read_to_string(d.join(format!("p.{n}.txt"))).unwrap();
            text.lines().filter(|l| !l.starts_with("dims")).count()
        })
        .collect();
    let total = std::fs::read_to_string(&g).unwrap().lines().count() - 1;
    assert_eq!(sizes.iter().sum::<usize>(), total);

    let out = eklf(&[
        "train",
        "--input", s(&d.join("p.train.txt")),
        "--val", s(&d.join("p.val.txt")),
        "--output", s(&d.join("m.json")),
        "--report", s(&d.join("train.json")),
        "--history-csv", s(&d.join("h.csv")),
        "--rank", "3",
        "--audit",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_report(&d.join("train.json")).unwrap();
    assert_eq!(r.command, "train");
    assert_eq!(r.config["hyper"]["rank"], 3);
    assert!(!r.history.is_empty());
    assert!(r.history.iter().all(|h| h.covariance.is_some()));
    let csv = std::fs::read_to_string(d.join("h.csv")).unwrap();
    assert_eq!(csv.lines().count(), r.history.len() + 1);

    let out = eklf(&[
        "evaluate",
        "--model", s(&d.join("m.json")),
        "--input", s(&d.join("p.test.txt")),
        "--output", s(&d.join("eval.json")),
    ]);
    assert!(out.status.success());
    let r = read_report(&d.join("eval.json")).unwrap();
    assert!(r.rmse.unwrap() >= r.mae.unwrap());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("rmse "));

    let out = eklf(&["compare", "--input", s(&g), "--output", s(&d.join("c.json")), "--rank", "3"]);
    assert!(out.status.success());
    let r = read_report(&d.join("c.json")).unwrap();
    assert!(r.baseline.is_some());
    assert!(!std::fs::read_to_string(d.join("c.json")).unwrap().contains(s(d)));
}

#[test]
fn lambda_grid_selection() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = d.join("g.txt");
    assert!(eklf(&["generate", "--output", s(&g), "--nodes", "15", "--slots", "6", "--density", "0.1"]).status.success());
    assert!(eklf(&["split", "--input", s(&g), "--output", s(&d.join("p"))]).status.success());
    let out = eklf(&[
        "train",
        "--input", s(&d.join("p.train.txt")),
        "--val", s(&d.join("p.val.txt")),
        "--output", s(&d.join("m.json")),
        "--lambda-grid", "0.001,0.01,0.1",
        "--rank", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model: eklf::Model = serde_json::from_str(&std::fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert!([0.001, 0.01, 0.1].contains(&model.hyper.lambda));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1\t1\t2\t0.5\n1\t9\t2\t0.5\n").unwrap();

    assert_eq!(eklf(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(eklf(&["train", "--input", s(&bad)]).status.code(), Some(2));

    let out = eklf(&["inspect", "--input", s(&bad), "--dims", "3,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = eklf(&["inspect", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));

    let out = eklf(&[
        "train", "--input", s(&bad), "--dims", "9,1", "--output", s(&dir.path().join("m.json")), "--lambda", "-1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inspect_prints_density() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.txt");
    std::fs::write(&f, "# toy\ndims 2 2\n1,1,2,0.5\n2 2 1 1.5\n").unwrap();
    let out = eklf(&["inspect", "--input", s(&f)]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "nodes 2  slots 2  known 2  density 25.0000%"
    );
}
