mod common;

use std::fs;
use std::process::Command;

use ijack::cli::{parse_report, report::CSV_HEADER, selfcheck};
use ijack::instances::random_instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ijack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ijack"))
}

#[test]
fn exact_run_reports_fixture_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("prod.json");
    fs::write(&cfg, common::PROD_CONFIG).unwrap();
    let out = ijack().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let exact = report.exact.unwrap();
    assert_eq!(exact.var_exact, 1.0);
    assert_eq!(exact.ej, vec![2.0, 2.0]);
    assert_eq!(exact.ek, vec![0.0, 2.0]);
    assert_eq!(exact.spectrum, vec![0.0, 1.0]);
    assert_eq!(report.version, env!("CARGO_PKG_VERSION"));
}

#[test]
fn mc_run_covers_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("prod.json");
    let out_path = dir.path().join("report.json");
    fs::write(&cfg, common::PROD_CONFIG).unwrap();
    let status = ijack()
        .args(["run", cfg.to_str().unwrap(), "--engine", "mc", "--seed", "42", "--out"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let report = parse_report(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report.seed, Some(42));
    assert!(report.exact.is_none());
    let mc = report.mc.unwrap();
    for (e, exact) in mc.ej.iter().zip([2.0, 2.0]) {
        assert!(e.estimate.covers(exact, 4.0), "{e:?}");
    }
    for (e, exact) in mc.ek.iter().zip([0.0, 2.0]) {
        assert!(e.estimate.covers(exact, 4.0), "{e:?}");
    }
}

#[test]
fn both_formats_write_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("prod.json");
    let text = common::PROD_CONFIG.replacen('{', "{\n  \"output\": {\"format\": \"both\"},", 1);
    fs::write(&cfg, text).unwrap();
    let json = dir.path().join("out.json");
    let status = ijack().arg("run").arg(&cfg).arg("--out").arg(&json).status().unwrap();
    assert!(status.success());
    assert!(parse_report(&fs::read_to_string(&json).unwrap()).is_ok());
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn bad_probabilities_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, common::PROD_CONFIG.replacen("[0.5, 0.5]}\n  ]", "[0.5, 0.4]}\n  ]", 1)).unwrap();
    let out = ijack().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("distribution 1: probabilities sum to 0.9"), "{err}");
}

#[test]
fn missing_config_is_an_input_error() {
    let out = ijack().args(["run", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn selfcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ijack()
        .args(["selfcheck", "--instances", "200", "--seed", "7"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alternating_j") && text.contains("200 instances"), "{text}");
}

#[test]
fn degenerate_single_instance_passes() {
    let params = selfcheck::selfcheck_params();
    let seed = (0u64..)
        .find(|&s| {
            let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(s), &params);
            inst.dists.iter().filter(|d| d.len() == 1).count() >= 2
        })
        .unwrap();
    let out = ijack()
        .args(["selfcheck", "--instances", "1", "--seed", &seed.to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn injected_fault_exits_with_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = ijack()
        .args(["selfcheck", "--instances", "50", "--inject-fault", "--replay-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let replay: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(replay.len(), 1);
    let path = replay[0].as_ref().unwrap().path();
    let rerun = ijack().arg("run").arg(&path).output().unwrap();
    assert_eq!(rerun.status.code(), Some(0));
}
