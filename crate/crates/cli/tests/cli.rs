use std::process::{Command, Output};

fn mvt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvt")).args(args).env_remove("MVT_CACHE_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn moments_text_is_canonical() {
    let o = mvt(&["moments", "--family", "gaussian", "--d", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("m1 = 1 mu"), "{text}");
    assert!(text.contains("m2 = 1 mu^2 + 1 s2"), "{text}");
}

#[test]
fn json_reports_carry_schema_and_command() {
    let o = mvt(&["--format", "json", "--no-timestamp", "hilbert", "--family", "gamma", "--d", "4"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "hilbert");
    assert_eq!(v["ok"], true);
    assert!(v.get("timestamp").is_none());

    let o = mvt(&["--format", "json", "hilbert", "--family", "gamma", "--d", "4"]);
    assert!(json(&o)["timestamp"].is_u64());
}

#[test]
fn verify_passes_with_exit_zero() {
    let o = mvt(&["verify", "--family", "ig", "--d", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["moments", "--family", "nope", "--d", "3"][..],
        &["moments", "--bogus"],
        &["--threads", "0", "moments", "--family", "gamma", "--d", "2"],
        &["estimate", "--family", "gamma", "--input", "/definitely/not/here.txt"],
    ] {
        let o = mvt(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_lists_tolerance_defaults() {
    let text = stdout(&mvt(&["estimate", "--help"]));
    for needle in ["--tol-corrector 1e-9", "--tol-dedup 1e-8", "--reality-tol 1e-6", "--positivity-margin 1e-9"] {
        assert!(text.contains(needle), "missing {needle}");
    }
    assert!(stdout(&mvt(&["eddeg", "--help"])).contains("Tolerance defaults"));
    assert!(stdout(&mvt(&["generators", "--help"])).contains("exact"));
}

#[test]
fn sample_then_estimate_single_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.txt");
    let o = mvt(&["--out", data.to_str().unwrap(), "sample", "--family", "gamma", "--params", "3,2", "--n", "200000", "--seed", "9"]);
    assert!(o.status.success());
    let o = mvt(&["--format", "json", "estimate", "--family", "gamma", "--input", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let c = &v["candidates"][0]["components"][0];
    let (k, theta) = (c["k"].as_f64().unwrap(), c["theta"].as_f64().unwrap());
    assert!((k / 3.0 - 1.0).abs() < 0.05 && (theta / 2.0 - 1.0).abs() < 0.05, "{v}");
}

#[test]
fn cache_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.txt");
    mvt(&["--out", data.to_str().unwrap(), "sample", "--family", "gaussian", "--params", "0,1;3,0.5", "--weights", "0.3,0.7", "--n", "20000", "--seed", "4"]);
    let cache = dir.path().join("cache");
    let o = Command::new(env!("CARGO_BIN_EXE_mvt"))
        .args(["estimate", "--family", "gaussian", "--k", "2", "--input", data.to_str().unwrap()])
        .env("MVT_CACHE_DIR", &cache)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_dir(&cache).unwrap().next().is_some(), "start set was not cached");
}
