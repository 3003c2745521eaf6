use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(dir: &Path, subcommand: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{subcommand}.cfg"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_hartree-lab"))
        .arg(subcommand)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .output()
        .unwrap()
}

const SMALL: &str = "p = 3\nomega = 1\nn = 16\nL = 8\ntol = 1e-7\n";

#[test]
fn unknown_and_missing_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    let unknown = lab(dir.path(), "classify", &format!("{SMALL}colour = blue\n"), &["--out", o]);
    assert_eq!(unknown.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("colour"));
    let missing = lab(dir.path(), "dichotomy", SMALL, &["--out", o]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("dt"));
    let supercritical_only = lab(dir.path(), "orbit-stability", "p = 3\nn = 16\nL = 8\ndt = 0.01\nt_end = 1\n", &["--out", o]);
    assert_eq!(supercritical_only.status.code(), Some(4));
}

#[test]
fn solver_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = lab(dir.path(), "groundstate", "p = 3\nn = 16\nL = 8\nmax_iter = 2\n", &["--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_assertions_are_listed_and_summarized() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // far too short for any blow-up
    let config = format!("{SMALL}dt = 1e-3\nt_end = 0.02\nlambdas = 1.05, 1.02\n");
    let o = lab(dir.path(), "instability", &config, &["--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("FAIL,CONCORDANCE_FAILURE,blowup_1.05"), "{stderr}");
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("instability,blowup_1.02,") && l.ends_with(",true,false")), "{summary}");
    assert!(summary.lines().any(|l| l.starts_with("instability,distances_decrease,") && l.ends_with(",true,true")));
    let table = fs::read_to_string(out.join("instability.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "lambda,h1_distance,expected_distance,outcome,t_star");
    assert!(out.join("instability.svg").exists());
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{SMALL}widths = 0.9, 1.2\nlambda_points = 25\n");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = lab(dir.path(), "classify", &config, &["--out", out.to_str().unwrap(), "--seed", "9", "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((fs::read(out.join("classify.csv")).unwrap(), fs::read(out.join("summary.csv")).unwrap()));
        assert!(out.join("scan_ray_1.svg").exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "ray_id,width,lambda,L,N,V,region");
    assert_eq!(text.lines().count(), 1 + 2 * 25);
}

#[test]
fn sweeps_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = "n = 16\nL = 8\nn_probes = 12\ntol = 1e-6\n";
    let mut tables = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("gn{i}"));
        let o = lab(dir.path(), "gn-verify", config, &["--out", out.to_str().unwrap(), "--seed", "5", "--threads", threads]);
        assert!(matches!(o.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(fs::read(out.join("gn_ratios.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}
