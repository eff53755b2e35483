use std::fs;
use std::process::{Command, Output};

fn hybrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid")).args(args).env_remove("HYBRID_OUTPUT_DIR").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no {key} in {text}"));
    line.split('=').nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn ecp_run_reference_angles() {
    let o = hybrid(&["ecp", "run", "--alpha", "1", "--angles", "0.7853981634,0.7853981634,1.1780972451"]);
    assert_eq!(o.status.code(), Some(0));
    let t = stdout(&o);
    assert!((value_after(&t, "P_closed") - 0.07304).abs() < 1e-5, "{t}");
    assert!((value_after(&t, "P_sim") - value_after(&t, "P_closed")).abs() < 1e-10);
}

#[test]
fn ecp_run_equal_coefficients_json() {
    let o = hybrid(&["ecp", "run", "--alpha", "1", "--zeta", "0.5", "--beta", "0.5", "--gamma", "0.5", "--delta", "0.5", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["P_closed"].as_f64().unwrap() - 0.0854148).abs() < 1e-6);
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(v["stages"].as_array().unwrap().iter().any(|s| s["name"] == "vacuum g2"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["ecp", "run", "--angles", "0.1,0.2,0.3"],
        vec!["ecp", "run", "--alpha", "1"],
        vec!["ecp", "run", "--alpha", "1", "--zeta", "0.5", "--beta", "0.5"],
        vec!["ecp", "run", "--alpha", "1", "--angles", "0.1,0.2,0.3", "--zeta", "0.5", "--beta", "0.5", "--gamma", "0.5", "--delta", "0.5"],
        vec!["ecp", "run", "--alpha", "1", "--angles", "0.1,0.2"],
        vec!["ecp", "run", "--alpha", "-1", "--angles", "0.1,0.2,0.3"],
        vec!["ecp", "run", "--alpha", "1", "--zeta", "0.5", "--beta", "0.5", "--gamma", "0.5", "--delta", "0.6"],
        vec!["ecp", "sweep", "--axis", "theta9"],
        vec!["hqis", "run", "--recoverer", "eve"],
    ] {
        let o = hybrid(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn sweep_default_grid_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = hybrid(&["ecp", "sweep", "--output", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta1,theta2,theta3,alpha,P_closed,P_sim"));
    assert_eq!(lines.count(), 181 * 3);
}

#[test]
fn sweep_two_d_and_output_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hybrid"))
        .args(["ecp", "sweep", "--axis", "theta1", "--axis", "theta2", "--points", "7", "--alphas", "1"])
        .env("HYBRID_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("sweep_theta1_theta2.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 49);
}

#[test]
fn sweep_unwritable_path_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = hybrid(&["ecp", "sweep", "--points", "3", "--output", blocker.join("x.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hqis_run_bob_hundred_trials() {
    let o = hybrid(&["hqis", "run", "--lambda-re", "0.6", "--eta-re", "0.8", "--recoverer", "bob", "--trials", "100", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ts = v.as_array().unwrap();
    assert_eq!(ts.len(), 100);
    for t in ts {
        assert!((t["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        for k in ["trial", "alice_outcome", "recoverer", "helper_outcomes", "corrections", "branch_probabilities"] {
            assert!(t.get(k).is_some());
        }
    }
    let again = hybrid(&["hqis", "run", "--lambda-re", "0.6", "--eta-re", "0.8", "--recoverer", "bob", "--trials", "100", "--seed", "7"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn hqis_unnormalized_secret_exits_2() {
    let o = hybrid(&["hqis", "run", "--lambda-re", "0.6", "--eta-re", "0.7", "--recoverer", "diana"]);
    assert_eq!(o.status.code(), Some(2));
    // within 1e-9 is accepted
    let o = hybrid(&["hqis", "run", "--lambda-re", "0.6", "--eta-re", "0.8000000001", "--recoverer", "diana"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn hqis_tables_contain_published_rows() {
    let o = hybrid(&["hqis", "tables"]);
    assert_eq!(o.status.code(), Some(0));
    let t = stdout(&o);
    let bob: Vec<&str> = t.split("recoverer: bob").nth(1).unwrap().lines().collect();
    let row = |a: &str, h: &str| bob.iter().find(|l| l.split_whitespace().take(2).eq([a, h])).map(|l| l.split_whitespace().last().unwrap().to_string());
    assert_eq!(row("phiL+", "phiL+").as_deref(), Some("Z"));
    assert_eq!(row("phiL+", "phiL-").as_deref(), Some("I"));
    assert_eq!(row("phiL+", "psiL+").as_deref(), Some("X"));
    assert_eq!(row("phiL+", "psiL-").as_deref(), Some("iY"));
    assert!(t.contains("published rows: all match"));
}

#[test]
fn bell_audit_json() {
    let o = hybrid(&["hqis", "bell-audit", "--alpha", "0.8", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ids = v["identities"].as_array().unwrap();
    assert_eq!(ids.len(), 8);
    assert!(ids.iter().all(|i| i["residual"].as_f64().unwrap() < 1e-12));
}

#[test]
fn dump_state_round_trips_through_core() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    let o = hybrid(&["ecp", "run", "--alpha", "0.9", "--angles", "0.5,1.0,2.0", "--dump-state", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["terms"].as_array().unwrap().len(), 4);
    assert_eq!(v["alpha"], 0.9);
}
