use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thinspec"))
}

fn star3_json(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("star3.json");
    let mut edges = String::new();
    for k in 0..3 {
        edges.push_str(&format!(
            r#"{{"id":{k},"tail":0,"head":{},"length":1.0,"density":{{"type":"const","value":0.5}}}},"#,
            k + 1
        ));
    }
    edges.pop();
    let s = 3.0f64.sqrt() / 2.0;
    let json = format!(
        r#"{{"vertices":[{{"id":0,"x":0.0,"y":0.0}},{{"id":1,"x":1.0,"y":0.0}},
            {{"id":2,"x":-0.5,"y":{s}}},{{"id":3,"x":-0.5,"y":{}}}],"edges":[{edges}]}}"#,
        -s
    );
    fs::write(&path, json).unwrap();
    path
}

#[test]
fn spectrum_star_oracle() {
    let dir = tempdir();
    let graph = star3_json(&dir);
    let out = bin().args(["spectrum"]).arg(&graph).args(["--num-eigs", "6", "--mesh-h", "0.002"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let want = [0.0, 2.4674, 2.4674, 9.8696, 22.207, 22.207];
    for (v, w) in vals.iter().zip(want) {
        assert!((v - w).abs() < 1e-3, "{v} vs {w}");
    }
}

#[test]
fn malformed_file_diagnostic() {
    let dir = tempdir();
    let path = dir.join("bad.json");
    fs::write(&path, r#"{"vertices":[{"id":0}],"edges":[{"id":0,"tail":0,"head":1}]}"#).unwrap();
    let out = bin().arg("spectrum").arg(&path).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    // diagnostic names the missing field
    assert!(err.contains("length"), "stderr: {err}");
}

#[test]
fn sierpinski_deterministic_and_guarded() {
    let a = bin().args(["sierpinski", "--generations", "3", "--levels", "2"]).output().unwrap();
    let b = bin().args(["sierpinski", "--generations", "3", "--levels", "2"]).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for needle in ["7.50000000000e-1", "1.50000000000e0", "1.74306090567e-1", "1.07569390943e0"] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let refused = bin().args(["sierpinski", "--generations", "9", "--levels", "1"]).output().unwrap();
    assert!(!refused.status.success());
}

#[test]
fn closeness_random_reproducible_and_empty() {
    let a = bin().args(["closeness-random", "--trials", "20", "--seed", "5"]).output().unwrap();
    let b = bin().args(["closeness-random", "--trials", "20", "--seed", "5"]).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let empty = bin().args(["closeness-random", "--trials", "0"]).output().unwrap();
    assert!(empty.status.success());
}

#[test]
fn sweep_requires_decreasing_eps() {
    let dir = tempdir();
    let graph = star3_json(&dir);
    let out = bin().arg("sweep").arg(&graph).args(["--eps", "0.1,0.3"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("decreasing"), "stderr: {err}");
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("thinspec-cli-test-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}
