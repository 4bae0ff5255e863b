mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use obstacle_lab::cli::read_manifest;
use obstacle_lab::config::{FieldConfig, RunConfig};
use obstacle_lab::io::{read_field, sha256_hex};
use proptest::prelude::*;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obstacle-lab")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_ok(args: &[&str]) -> Output {
    let o = lab(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    o
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let m = read_manifest(dir).unwrap();
    m.artifacts.iter().map(|a| (a.path.clone(), std::fs::read(dir.join(&a.path)).unwrap())).collect()
}

#[test]
fn solve_needs_a_config() {
    let o = lab(&["solve"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(lab(&["solve", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn very_thin_with_nonnegative_weight_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("very_thin.toml")).unwrap().replace("a = -0.5\nres = 33", "a = 0.25\nres = 33");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let o = lab(&["solve", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("capacity"), "{}", stderr(&o));
}

#[test]
fn unparsable_config_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[problem\nn = 1").unwrap();
    assert_eq!(lab(&["solve", "--config", path.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn solve_writes_a_reproducible_run() {
    let dirs: Vec<PathBuf> = (0..2).map(|_| tempfile::tempdir().unwrap().keep()).collect();
    for d in &dirs {
        let o = run_ok(&["solve", "--config", &config("ext2.toml"), "--out", d.to_str().unwrap(), "--seed", "7"]);
        assert!(String::from_utf8_lossy(&o.stdout).trim().ends_with("manifest.json"));
    }
    let (first, second) = (artifacts(&dirs[0]), artifacts(&dirs[1]));
    // the saved configs differ only in the output directory
    for (name, bytes) in &first {
        if name != "config.toml" {
            assert!(second[name] == *bytes, "{name} differs between identical runs");
        }
    }
    let reread = |bytes: &[u8]| {
        let mut c = RunConfig::parse(std::str::from_utf8(bytes).unwrap()).unwrap();
        c.output.dir.clear();
        c
    };
    assert_eq!(reread(&first["config.toml"]), reread(&second["config.toml"]));
    let keys: Vec<&str> = first.keys().map(String::as_str).collect();
    assert_eq!(keys, ["config.toml", "field.bin", "field.json", "kkt.json"]);

    let m = read_manifest(&dirs[0]).unwrap();
    assert_eq!(m.command, "solve");
    assert_eq!(m.seed, 7);
    assert_eq!(m.version, env!("CARGO_PKG_VERSION"));
    assert!(m.timestamp.parse::<u64>().is_ok());
    assert!(m.timings.iter().any(|(stage, t)| stage == "solve" && *t >= 0.0));
    for a in &m.artifacts {
        assert_eq!(sha256_hex(&first[&a.path]), a.sha256, "{}", a.path);
    }
    let saved = RunConfig::parse(&String::from_utf8(first["config.toml"].clone()).unwrap()).unwrap();
    assert_eq!(saved.hash(), m.config_hash);
    assert_eq!(saved.seed, 7);

    let kkt: serde_json::Value = serde_json::from_slice(&first["kkt.json"]).unwrap();
    for key in ["max_obstacle_violation", "max_positive_flux", "max_complementarity", "max_residual"] {
        assert!(kkt[key].as_f64().unwrap() <= 1e-6, "{key} = {}", kkt[key]);
    }
    let field = read_field(&dirs[0].join("field.bin")).unwrap();
    assert_eq!(field.grid.res(), 129);
    for d in dirs {
        std::fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn solved_field_feeds_diagnose_and_blowup() {
    let dir = tempfile::tempdir().unwrap();
    let solved = dir.path().join("solve");
    run_ok(&["solve", "--config", &config("ext2.toml"), "--out", solved.to_str().unwrap()]);
    let field = solved.join("field.bin");
    let diag = dir.path().join("diag");
    run_ok(&["diagnose", "--config", &config("ext2.toml"), "--field", field.to_str().unwrap(), "--out", diag.to_str().unwrap(), "--lambdas", "2,3"]);
    let csv = std::fs::read_to_string(diag.join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..5], ["c1", "r", "H", "D", "N"]);
    assert!(header.contains(&"W_3") && header.contains(&"H_2_monotone"));
    let n_col = header.iter().position(|h| *h == "N").unwrap();
    for line in lines {
        let n: f64 = line.split(',').nth(n_col).unwrap().parse().unwrap();
        assert!((n - 2.0).abs() < 1e-3, "{line}");
    }

    let bl = dir.path().join("blowup");
    run_ok(&["blowup", "--config", &config("ext2.toml"), "--field", field.to_str().unwrap(), "--out", bl.to_str().unwrap()]);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(bl.join("blowup.json")).unwrap()).unwrap();
    assert_eq!(json[0]["first"]["kappa"], 2);

    let missing = dir.path().join("missing.bin");
    assert_eq!(lab(&["diagnose", "--field", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn analytic_field_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("diag");
    run_ok(&["diagnose", "--config", &config("remark_pair.toml"), "--out", d.to_str().unwrap(), "--center", "0.3,0"]);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("profile.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 1);
    let n0 = json[0]["n_at_zero"]["value"].as_f64().unwrap();
    assert!((n0 - 2.0).abs() < 1e-3, "{n0}");

    let s = dir.path().join("scan");
    run_ok(&["scan", "--config", &config("remark_pair.toml"), "--out", s.to_str().unwrap()]);
    let csv = std::fs::read_to_string(s.join("strata.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains("S4^0")));
    assert!(csv.lines().filter(|l| l.contains("S2^1")).count() >= 8);
}

#[test]
fn kernel_checks() {
    let dir = tempfile::tempdir().unwrap();
    let k = dir.path().join("symbol");
    run_ok(&["kernel", "--check", "symbol", "--a", "-0.5", "--n", "2", "--out", k.to_str().unwrap()]);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(k.join("kernel.json")).unwrap()).unwrap();
    assert_eq!(json["consistent"], true);
    assert!(json["relative_spread"].as_f64().unwrap() <= 0.02);

    let e = dir.path().join("eval");
    run_ok(&["kernel", "--check", "eval", "--a", "-0.5", "--n", "2", "--at", "0.3,0.4,0", "--out", e.to_str().unwrap()]);
    assert!(e.join("kernel.json").exists());
    assert_eq!(lab(&["kernel", "--check", "eval", "--a", "0.5", "--n", "2", "--at", "0,1,0"]).status.code(), Some(3));
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn configs_round_trip(seed in any::<u64>(), n in 1usize..=3, a in -0.9f64..0.9, spacing in 0.01f64..0.5,
                          centers in prop::collection::vec(prop::collection::vec(-0.5f64..0.5, 3), 0..4),
                          lambdas in prop::collection::vec(0.5f64..6.0, 0..4)) {
        let mut cfg = RunConfig { seed, ..Default::default() };
        cfg.field = Some(FieldConfig { n, a, poly: "x1^2 - 0.5".into(), extend: true });
        cfg.scan.spacing = spacing;
        cfg.diagnostics.centers = centers.iter().map(|c| c[..n].to_vec()).collect();
        cfg.diagnostics.lambdas = lambdas;
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}
