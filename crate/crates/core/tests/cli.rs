use std::fs;

use finsler_solitons::cli::{run, EXIT_CHECK_FAILED, EXIT_PASS, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["finsler-verify"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, out, String::from_utf8(err).unwrap())
}

#[test]
fn verify_output_is_byte_identical_across_runs() {
    let args = ["verify", "--fixture", "shrinking", "--samples", "12", "--seed", "5"];
    let (c1, a, _) = call(&args);
    let (c2, b, _) = call(&args);
    assert_eq!((c1, c2), (EXIT_PASS, EXIT_PASS));
    assert_eq!(a, b);
    let (_, c, _) = call(&["verify", "--fixture", "shrinking", "--samples", "12", "--seed", "6"]);
    assert_ne!(a, c);
}

#[test]
fn worker_count_does_not_change_output() {
    let (_, one, _) = call(&["--workers", "1", "crosscheck", "--suite", "navigation", "--count", "6"]);
    let (_, four, _) = call(&["--workers", "4", "crosscheck", "--suite", "navigation", "--count", "6"]);
    assert_eq!(one, four);
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let report = dir.path().join("report.json");
    fs::write(&cfg, r#"{"fixture": "expanding", "samples": 6, "seed": 3, "tol": 1e-7}"#).unwrap();
    let (code, out, _) = call(&["verify", "--config", cfg.to_str().unwrap(), "-o", report.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["fixture"], "expanding");
    assert_eq!(v["samples"], 6);

    let (code, out, _) = call(&["verify", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(code, EXIT_PASS);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["seed"], 9);

    fs::write(&cfg, r#"{"fixture": "cigar", "bogus": 1}"#).unwrap();
    assert_eq!(call(&["verify", "--config", cfg.to_str().unwrap()]).0, EXIT_USAGE);
}

#[test]
fn every_perturbation_fails() {
    for p in ["f:1e-2", "W:1e-2", "kappa:1e-2", "mu:1e-2"] {
        let (code, _, err) = call(&["verify", "--fixture", "gaussian", "--samples", "8", "--perturb", p]);
        assert_eq!(code, EXIT_CHECK_FAILED, "{p}");
        assert!(err.contains("FAILED"), "{p}");
    }
}

#[test]
fn crosscheck_suites_pass_at_small_counts() {
    for suite in ["randers-ricci", "navigation", "lie-identity", "navigation-ricci", "s-dot", "jets-vs-fd"] {
        let (code, out, err) = call(&["crosscheck", "--suite", suite, "--count", "4", "--format", "text"]);
        assert_eq!(code, EXIT_PASS, "{suite}: {err}");
        assert!(String::from_utf8(out).unwrap().starts_with(suite));
    }
}
