use std::path::Path;
use std::process::{Command, Output};

const SG2_FILE: &str = r#"{
  "name": "sg-file",
  "letters": 3,
  "boundary": 3,
  "fixed_letters": [0, 1, 2],
  "glue": [[0, 1, 1, 0], [0, 2, 2, 0], [1, 2, 2, 1]]
}"#;

fn pcfdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcfdist")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn spec_export_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for builtin in ["gasket:2", "gasket:3", "hexagasket"] {
        assert!(pcfdist(&["--spec", builtin, "--out", d, "spec"]).status.success());
        let first = read(dir.path(), "spec.json");
        let path = dir.path().join("exported.json");
        std::fs::write(&path, &first).unwrap();
        let again = pcfdist(&["--spec", path.to_str().unwrap(), "spec"]);
        assert!(again.status.success());
        assert_eq!(stdout(&again), first);
    }
}

#[test]
fn missing_weights_are_solved_for() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sg.json");
    std::fs::write(&path, SG2_FILE).unwrap();
    let out = pcfdist(&["--spec", path.to_str().unwrap(), "spec"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for r in json["r"].as_array().unwrap() {
        assert!((r.as_f64().unwrap() - 0.6).abs() < 1e-12);
    }
    assert!(pcfdist(&["--spec", path.to_str().unwrap(), "check"]).status.success());
}

#[test]
fn malformed_specs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_glue = SG2_FILE.replace("[1, 2, 2, 1]", "[1, 7, 2, 1]");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, bad_glue).unwrap();
    let out = pcfdist(&["--spec", path.to_str().unwrap(), "check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("glue[2]"));

    std::fs::write(&path, "{ \"name\": ").unwrap();
    let out = pcfdist(&["--spec", path.to_str().unwrap(), "check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:1:"));
}

#[test]
fn subcommand_examples() {
    assert!(pcfdist(&["check"]).status.success());
    assert!(pcfdist(&["--spec", "nonagasket", "check"]).status.success());

    let same = pcfdist(&["geodesic", "--from", "0:1", "--to", "1:0", "--nmax", "3"]);
    assert!(same.status.success());
    let csv = stdout(&same);
    assert!(csv.contains("n,value\n1,0\n2,0\n3,0\n"), "{csv}");

    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cert = pcfdist(&["--out", d, "certify", "--from", "-:0", "--to", "-:1", "--level", "6"]);
    assert_eq!(cert.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "certificate.json")).unwrap();
    assert_eq!(json["feasible"], true);
    assert!(read(dir.path(), "slack.csv").starts_with("word,depth,slack\n"));

    let tiny = pcfdist(&["--tuple", "1,0,0", "profile", "--from", "-:0", "--level", "1"]);
    assert!(tiny.status.success());
    assert!(stdout(&tiny).contains("id,word,label,value\n0,-,0,0\n"));

    assert_eq!(pcfdist(&["graph", "--level", "40"]).status.code(), Some(2));
    assert_eq!(pcfdist(&["--tuple", "1,2", "embed", "--level", "1"]).status.code(), Some(2));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cases: &[&[&str]] = &[
        &["check"],
        &["graph", "--level", "3"],
        &["geodesic", "--from", "-:0", "--to", "-:1", "--nmax", "6"],
        &["profile", "--from", "01:2", "--level", "4"],
        &["certify", "--from", "-:0", "--to", "-:2", "--level", "4"],
        &["intrinsic", "--from", "-:0", "--to", "-:1", "--level", "3", "--max-iter", "50"],
        &["embed", "--level", "3"],
        &["measures", "--depth", "3"],
        &["spec"],
        &["--spec", "hexagasket", "geodesic", "--from", "-:0", "--to", "-:1", "--nmax", "3"],
    ];
    for args in cases {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let run = |dir: &Path| {
            let mut full = vec!["--out", dir.to_str().unwrap()];
            full.extend_from_slice(args);
            let o = pcfdist(&full);
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            o.stdout
        };
        assert_eq!(run(a.path()), run(b.path()), "{args:?}");
        let mut names: Vec<_> = std::fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert_eq!(names.is_empty(), args[0] == "check", "{args:?}");
        for name in names {
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert_eq!(x, y, "{args:?} {name:?}");
        }
    }
}
