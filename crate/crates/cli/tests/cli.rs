use std::path::Path;
use std::process::{Command, Output};

use commlab::grid::{Grid, GridFn};
use commlab::io::{read_gridfn, write_gridfn};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_commlab"))
        .args(args)
        .env_remove("COMMLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_two_point_weight() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.json");
    write_gridfn(&w, &GridFn::new(Grid::d1(2).unwrap(), vec![1.0, 4.0]).unwrap()).unwrap();
    let v = json(&run(&["constant", "--class", "a_p", "--p", "2", "--weight", s(&w)]));
    assert_eq!(v["result"]["value"].as_f64().unwrap(), 1.5625);
    assert!(v["version"].is_string());
    assert_eq!(v["config"]["command"]["constant"]["p"].as_f64(), Some(2.0));
}

#[test]
fn constant_of_ones_and_generators() {
    let v = json(&run(&["constant", "--class", "a_p", "--p", "3", "--weight-gen", r#"{"kind":"ones"}"#, "--n", "64"]));
    assert_eq!(v["result"]["value"].as_f64().unwrap(), 1.0);
    let v = json(&run(&[
        "constant",
        "--class",
        "rh",
        "--q",
        "2",
        "--weight-gen",
        r#"{"kind":"two_value","a":4}"#,
        "--n",
        "2",
    ]));
    assert!((v["result"]["value"].as_f64().unwrap() - 8.5f64.sqrt() / 2.5).abs() < 1e-14);
    let v = json(&run(&[
        "constant",
        "--class",
        "membership",
        "--p",
        "3",
        "--r-minus",
        "1.5",
        "--r-plus",
        "6",
        "--weight-gen",
        r#"{"kind":"power","a":0.3}"#,
        "--n",
        "64",
    ]));
    assert_eq!(v["result"]["membership"]["member"], Value::Bool(true));
}

#[test]
fn commutator_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    let out = dir.path().join("out.json");
    let g = Grid::d1(128).unwrap();
    write_gridfn(&f, &GridFn::from_fn(g, |x, _| (7.0 * x).sin() + x * x).unwrap()).unwrap();
    for op in ["hilbert", "riesz"] {
        for k in ["1", "2", "3"] {
            let v = json(&run(&[
                "commutator",
                "--operator",
                op,
                "--order",
                k,
                "--symbol-gen",
                r#"{"kind":"dyadic_martingale","seed":3,"depth":5}"#,
                "--input",
                s(&f),
                "--method",
                "both",
                "--output",
                s(&out),
            ]));
            let err = v["result"]["relative_error"].as_f64().unwrap();
            assert!(err <= 1e-8, "{op} k={k}: {err}");
            assert_eq!(v["result"]["delta"].as_array().unwrap().len(), 1);
            assert_eq!(read_gridfn(&out).unwrap().grid, g);
        }
    }
    let g2 = dir.path().join("g.json");
    write_gridfn(&g2, &GridFn::from_fn(g, |x, _| (3.0 * x).cos()).unwrap()).unwrap();
    let v = json(&run(&[
        "commutator",
        "--operator",
        "bht",
        "--multi-index",
        "1,1",
        "--symbol-gen",
        r#"{"kind":"two_value","a":1.5}"#,
        "--symbol-gen",
        r#"{"kind":"log_singularity"}"#,
        "--input",
        s(&f),
        "--input2",
        s(&g2),
        "--method",
        "both",
        "--delta",
        "0.3",
        "--output",
        s(&out),
    ]));
    assert!(v["result"]["relative_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn operator_and_norm() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let out = dir.path().join("hf.csv");
    write_gridfn(&f, &GridFn::new(Grid::d1(2).unwrap(), vec![1.0, 0.0]).unwrap()).unwrap();
    let o = run(&["operator", "--operator", "hilbert_direct", "--input", s(&f), "--output", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_gridfn(&out).unwrap().values, vec![0.0, 1.0]);

    let v = json(&run(&["norm", "--operator", "hilbert", "--weight-gen", r#"{"kind":"ones"}"#, "--n", "64"]));
    let r = &v["result"];
    assert_eq!(r["method"], "exact_spectral_p2");
    assert!(r["value"].as_f64().unwrap() < std::f64::consts::PI);
}

#[test]
fn verify_smoke_exact_is_clean_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["verify", "--suite", "exact", "--size", "smoke", "--seed", "7", "--out", s(d.path())]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["verify_report.json", "verify_report.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let csv = a.path().join("again.csv");
    let o = run(&["report", "--input", s(&a.path().join("verify_report.json")), "--csv", s(&csv)]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(a.path().join("verify_report.csv")).unwrap());
}

#[test]
fn config_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--suite", "exact", "--weights", "0", "--out", s(d.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["constant", "--class", "a_p", "--weight-gen", r#"{"kind":"ones"}"#, "--n", "8"]);
    assert_eq!(o.status.code(), Some(2), "missing --p");
    let o = run(&["constant", "--class", "a_p", "--p", "2", "--weight-gen", r#"{"kind":"ones"}"#, "--n", "6"]);
    assert_eq!(o.status.code(), Some(2), "N not a power of two");
    let o = run(&["constant", "--class", "a_p", "--p", "1", "--weight-gen", r#"{"kind":"ones"}"#, "--n", "8"]);
    assert_eq!(o.status.code(), Some(2), "A_1 unsupported");
}

#[test]
fn overflow_guard_exits_three() {
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("f.json");
    write_gridfn(&f, &GridFn::constant(Grid::d1(16).unwrap(), 1.0)).unwrap();
    let o = run(&[
        "commutator",
        "--operator",
        "hilbert",
        "--symbol-gen",
        r#"{"kind":"two_value","a":400}"#,
        "--input",
        s(&f),
        "--method",
        "contour",
        "--delta",
        "1",
        "--output",
        s(&d.path().join("o.json")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
