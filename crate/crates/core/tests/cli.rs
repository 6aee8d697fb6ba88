use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rpqds::cli::{MC_HEADER, SCAN_HEADER};

fn rpqds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpqds"))
        .current_dir(dir)
        .env("RPQDS_THREADS", "2")
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const SMALL_SCAN: &str = r#"
mode = "sns-asym"
distances = [50.0, 150.0]
e_d = [0.0, 0.05]
budget = 300
seed = 3
baseline = true
"#;

#[test]
fn scan_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.toml", SMALL_SCAN);
    let out = rpqds(dir.path(), &["asym-scan", "--config", &cfg, "--out", "a.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SCAN_HEADER);
    assert_eq!(lines.len(), 5);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 15);
        assert_eq!(f[14], "true");
        let gamma: f64 = f[4].parse().unwrap();
        assert!(gamma > 0.0);
    }
    assert!(dir.path().join("a.manifest.toml").exists());
}

#[test]
fn manifest_reproduces_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.toml", SMALL_SCAN);
    assert!(rpqds(dir.path(), &["asym-scan", "--config", &cfg, "--out", "a.csv"]).status.success());
    let out = rpqds(dir.path(), &["asym-scan", "--config", "a.manifest.toml", "--out", "b.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rates_are_stable_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.toml", SMALL_SCAN);
    for (seed, name) in [("1", "s1.csv"), ("2", "s2.csv")] {
        let out = rpqds(dir.path(), &["asym-scan", "--config", &cfg, "--seed", seed, "--out", name]);
        assert!(out.status.success());
    }
    let a = fs::read_to_string(dir.path().join("s1.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("s2.csv")).unwrap();
    for (x, y) in a.lines().zip(b.lines()).skip(1) {
        let rx: f64 = x.split(',').nth(2).unwrap().parse().unwrap();
        let ry: f64 = y.split(',').nth(2).unwrap().parse().unwrap();
        assert!((rx / ry - 1.0).abs() < 0.02, "{rx} vs {ry}");
    }
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "mode = \"sns-asym\"\ndistance = [1.0]\n");
    let out = rpqds(dir.path(), &["asym-scan", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[error]") && err.contains("kind = \"config\""), "{err}");
}

#[test]
fn mode_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fin.toml", "mode = \"sns-finite\"\n");
    assert_eq!(rpqds(dir.path(), &["asym-scan", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(rpqds(dir.path(), &["reproduce", "fig6", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(rpqds(dir.path(), &["reproduce", "fig99"]).status.code(), Some(2));
}

#[test]
fn infeasible_everywhere_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "far.toml",
        "mode = \"sns-asym\"\ndistances = [2000.0]\nbudget = 100\n[system]\ne_d = 0.2\n",
    );
    let out = rpqds(dir.path(), &["asym-scan", "--config", &cfg, "--out", "far.csv"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kind = \"infeasible\""), "{err}");
    let csv = fs::read_to_string(dir.path().join("far.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",false"));
    let manifest = fs::read_to_string(dir.path().join("far.manifest.toml")).unwrap();
    assert!(manifest.contains("[error]"));
}

#[test]
fn mc_verify_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mc.toml", "mode = \"mc-verify\"\n[mc]\ntrials = 100000\npairing_samples = 100000\n");
    let out = rpqds(dir.path(), &["mc-verify", "--config", &cfg, "--out", "mc.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("mc.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), MC_HEADER);
    // Four settings of eight rows, plus two messaging rows.
    assert_eq!(csv.lines().count(), 1 + 4 * 8 + 2);
    let forged = csv.lines().find(|l| l.contains("forged_acceptance")).unwrap();
    assert!(forged.ends_with(",true"));
}

#[test]
fn optimize_prints_parameters_and_stdout_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "opt.toml",
        "mode = \"optimize\"\nprotocol = \"scf-asym\"\ndistances = [100.0]\nbudget = 300\n",
    );
    let out = rpqds(dir.path(), &["optimize", "--config", &cfg, "--out", "-"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("kind = \"scf\""), "{text}");
    assert!(text.contains(SCAN_HEADER));
    assert!(!dir.path().join("-.manifest.toml").exists());
}

#[test]
fn no_rp_leaves_baseline_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "scan.toml", SMALL_SCAN);
    let out = rpqds(dir.path(), &["asym-scan", "--config", &cfg, "--no-rp", "--out", "-"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[3], row[4]), ("", ""));
    assert!(rpqds(dir.path(), &["asym-scan", "--rp", "--no-rp"]).status.code() == Some(2));
}
