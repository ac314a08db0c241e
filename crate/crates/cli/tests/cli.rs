use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

fn psdrank(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_psdrank"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn m_epsilon_yes_pipeline() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.json");
    let d = dir.path().join("d.json");
    assert_eq!(
        code(&psdrank(
            &["mexample", "--epsilon", "0.3", "--out", path_str(&m)],
            None
        )),
        0
    );
    let out = psdrank(
        &["decide2", "--in", path_str(&m), "--out", path_str(&d)],
        None,
    );
    assert_eq!(code(&out), 0);
    let verdict: Value = serde_json::from_str(&fs::read_to_string(&d).unwrap()).unwrap();
    assert_eq!(verdict["answer"], "Yes");
    assert_eq!(verdict["factorization"]["k"], 2);

    let check = psdrank(&["verify", "--in", path_str(&d)], None);
    assert_eq!(code(&check), 0);
    let report = json(&check);
    assert_eq!(report["certificate"]["pass"], true);
    assert_eq!(report["factorization"]["pass"], true);
}

#[test]
fn m_epsilon_no_carries_a_ray() {
    let m = psdrank(&["mexample", "--epsilon", "0.1"], None);
    let out = psdrank(&["decide2"], Some(std::str::from_utf8(&m.stdout).unwrap()));
    assert_eq!(code(&out), 1);
    let verdict = json(&out);
    assert_eq!(verdict["answer"], "NoCertified");
    assert!(verdict["ray"].as_array().is_some_and(|r| !r.is_empty()));

    let check = psdrank(&["verify"], Some(std::str::from_utf8(&out.stdout).unwrap()));
    assert_eq!(code(&check), 0);
    assert_eq!(json(&check)["ray"]["valid_ray"], true);
}

#[test]
fn tampered_certificate_fails_verification() {
    let m = psdrank(&["mexample", "--epsilon", "0.5"], None);
    let mut verdict = json(&psdrank(
        &["decide2"],
        Some(std::str::from_utf8(&m.stdout).unwrap()),
    ));
    verdict["certificate"]["mu"][0] = Value::from(-1.0);
    verdict["factorization"]["B"][0][0][0] = Value::from(50.0);
    let check = psdrank(&["verify"], Some(&verdict.to_string()));
    assert_eq!(code(&check), 1);
    let report = json(&check);
    assert_eq!(report["certificate"]["pass"], false);
    assert_eq!(report["factorization"]["pass"], false);
}

#[test]
fn verify_dimension_mismatch_is_an_input_error() {
    let input = r#"{
        "matrix": {"rows": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]},
        "factorization": {"k": 1, "A": [[[1.0]], [[1.0]]], "B": [[[1.0]], [[1.0]]]}
    }"#;
    let out = psdrank(&["verify"], Some(input));
    assert_eq!(code(&out), 3);
    assert!(json(&out)["error"].as_str().unwrap().contains("dimension"));
}

#[test]
fn malformed_input_is_reported_as_json() {
    let out = psdrank(&["decide2"], Some("{ not json"));
    assert_eq!(code(&out), 3);
    assert!(json(&out)["error"].is_string());

    let out = psdrank(&["decide2"], Some(r#"{"rows": [[1.0, -2.0]]}"#));
    assert_eq!(code(&out), 3);

    let out = psdrank(&["factorize"], Some(r#"{"rows": [[1.0]]}"#));
    assert_eq!(code(&out), 3);
    assert!(json(&out)["error"].as_str().unwrap().contains("--k"));

    let out = psdrank(&["decide2", "--in", "/nonexistent/input.json"], None);
    assert_eq!(code(&out), 3);
}

#[test]
fn factorize_is_deterministic_and_verifiable() {
    let square = r#"{"rows": [[0,0,2,2],[2,0,0,2],[2,2,0,0],[0,2,2,0]]}"#;
    let args = ["factorize", "--k", "3", "--seed", "7", "--restarts", "8"];
    let a = psdrank(&args, Some(square));
    let b = psdrank(&args, Some(square));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let check = psdrank(&["verify"], Some(std::str::from_utf8(&a.stdout).unwrap()));
    assert_eq!(code(&check), 0);
}

#[test]
fn factorize_reports_not_found() {
    // the identity has psd rank 2, so size 1 cannot work
    let out = psdrank(
        &["factorize", "--k", "1", "--restarts", "2"],
        Some(r#"[[1, 0], [0, 1]]"#),
    );
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["answer"], "NotFound");
}

#[test]
fn csv_matrices() {
    let out = psdrank(&["mexample", "--epsilon", "0.5", "--format", "csv"], None);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    let back = psdrank(&["decide2", "--format", "csv"], Some(&text));
    assert_eq!(code(&back), 0);
    let bad = psdrank(&["decide2", "--format", "csv"], Some("1,2\n3,x\n"));
    assert_eq!(code(&bad), 3);
}

#[test]
fn slack_and_pair() {
    let input = r#"{
        "P": {"vertices": [[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]]},
        "Q": {"inequalities": [{"c": [1, 0], "d": 1}, {"c": [-1, 0], "d": 1}, {"c": [0, 1], "d": 1}, {"c": [0, -1], "d": 1}]}
    }"#;
    let out = psdrank(&["slack"], Some(input));
    assert_eq!(code(&out), 0);
    let m = json(&out);
    assert_eq!(m["rows"][0], serde_json::json!([0.5, 1.5, 0.5, 1.5]));
    let pair = psdrank(&["pair"], Some(&m.to_string()));
    assert_eq!(code(&pair), 0);
    assert_eq!(json(&pair)["P"]["vertices"].as_array().unwrap().len(), 4);

    let outside = input.replace("0.5, 0.5]", "1.5, 0.5]");
    assert_eq!(code(&psdrank(&["slack"], Some(&outside))), 3);
}

#[test]
fn hexlift_and_augment() {
    let hex = r#"{"vertices": [[1,0],[0.5,0.9],[-0.5,0.9],[-1,0],[-0.5,-0.9],[0.5,-0.9]]}"#;
    let out = psdrank(&["hexlift"], Some(hex));
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["biplanar"], true);
    assert!(v["projection_error"].as_f64().unwrap() <= 1e-9);

    let pent = r#"{"vertices": [[1,0],[0,1],[-1,0],[0,-1],[0.9,-0.9]]}"#;
    assert_eq!(code(&psdrank(&["hexlift"], Some(pent))), 3);

    let disk = r#"{"k": 2, "n": 2, "G": [[[1,0],[0,-1]], [[0,1],[1,0]], [[1,0],[0,1]]], "proj": [[1,0],[0,1]]}"#;
    let input = format!(r#"{{"lift": {disk}, "a0": 0.5, "a": [1.0, 0.0]}}"#);
    let out = psdrank(&["augment"], Some(&input));
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["k"], 3);
}

#[test]
fn minrank_rank3fact_and_bounds() {
    let m = psdrank(&["mexample", "--epsilon", "0.4"], None);
    let m = std::str::from_utf8(&m.stdout).unwrap().to_string();
    let out = psdrank(&["minrank", "--k", "2"], Some(&m));
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["k"], 2);

    let out = psdrank(&["rank3fact"], Some(&m));
    assert_eq!(code(&out), 0);
    assert!(json(&out)["factorization"]["k"].as_u64().unwrap() <= 4);

    let out = psdrank(&["bounds"], Some(&m));
    assert_eq!(code(&out), 0);
    let b = json(&out);
    assert_eq!(b["lower"]["value"], 2);
    assert_eq!(b["upper"]["value"], 4);

    let out = psdrank(&["bounds", "--full"], Some(&m));
    let b = json(&out);
    assert_eq!(b["lower"]["value"], 2);
    assert_eq!(b["upper"]["value"], 2);
}
