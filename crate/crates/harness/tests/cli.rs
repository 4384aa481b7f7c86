mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{testfn_toml, tiny_mnist_toml, write_tiny_mnist};

fn pogd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pogd")).args(args).current_dir(dir).output().unwrap()
}

#[test]
fn testfn_succeeds_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let text = testfn_toml("sphere", &[1.0, 1.0], 10, "name = \"pogd\"", "");
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let out = pogd(&["testfn", "c.toml", "--seed", "3", "--output", "out/f.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/f.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.lines().nth(1).unwrap().starts_with("pogd,0,0,"));
}

#[test]
fn config_errors_exit_with_one_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "seed = 0\n\n[optimizer]\nname = \"adamx\"\n").unwrap();
    let out = pogd(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&out.stderr));

    assert_eq!(pogd(&["run", "missing.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(pogd(&["frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn runtime_abort_exits_with_two_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = testfn_toml("sphere", &[1.0], 1000, "name = \"sgd\"", "[schedule]\nkind = \"constant\"\neta0 = 1e6");
    fs::write(dir.path().join("c.toml"), text).unwrap();
    let out = pogd(&["testfn", "c.toml", "--output", "boom.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("boom.csv").exists());
    let sidecar = fs::read_to_string(dir.path().join("boom.abort")).unwrap();
    assert!(sidecar.contains("non-finite"), "{sidecar}");
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_tiny_mnist(dir.path(), 16, 8);
    for opt in ["sgd", "pogd"] {
        let toml = tiny_mnist_toml(&paths, &dir.path().join(format!("{opt}.csv")), &format!("name = \"{opt}\""), "");
        fs::write(dir.path().join(format!("{opt}.toml")), toml).unwrap();
        let out = pogd(&["run", &format!("{opt}.toml"), "--iter-log"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join(format!("{opt}.iter.csv")).exists());
    }
    let out = pogd(&["report", "sgd.csv", "pogd.csv", "--acc-threshold", "0.05", "--long", "long.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out.stdout.is_empty());
    let long = fs::read_to_string(dir.path().join("long.csv")).unwrap();
    assert!(long.starts_with("series,epoch,step,metric,value"));

    assert_eq!(pogd(&["report", "sgd.csv"], dir.path()).status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        pogd_harness::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
