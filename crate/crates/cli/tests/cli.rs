use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bray(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bray"))
        .args(args)
        .env_remove("BRAY_SEED")
        .output()
        .expect("bray runs")
}

fn write_config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn eval_stationary_bridge_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "rbb.json",
        r#"{"scenario": "rbb", "theta": 1.0, "ar_rate": 1.0, "rho": 0.0, "sweep": {"from": 0, "to": 5, "points": 51}}"#,
    );
    let out = dir.path().join("rbb.csv");
    let o = bray(&["eval", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["q", "rbb_stationary_cdf"]);
    assert_eq!(rows.len(), 51);
    assert_eq!(rows[0][1], 0.0);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
    assert!(rows[50][1] > 1.0 - 1e-12);
    let at1 = rows.iter().find(|r| r[0] == 1.0).unwrap();
    assert!((at1[1] - 0.864_664_716_763_387_3).abs() < 1e-15);
}

#[test]
fn eval_motion_law_hand_value() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "rbm.json",
        r#"{"scenario": "rbm", "theta": 1.0, "rho": 0.0, "v": 0.0, "t": 1.0, "sweep": {"from": 0, "to": 2, "points": 3}}"#,
    );
    let out = dir.path().join("rbm.csv");
    assert!(bray(&["eval", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    // Full precision: 17 significant digits.
    assert!(text.lines().nth(2).unwrap().starts_with("1.0000000000000000e0,6.8268949213708"));
    let (_, rows) = read_csv(&out);
    assert!((rows[1][1] - 0.682_689).abs() < 5e-7);
}

#[test]
fn eval_every_scenario() {
    let dir = TempDir::new().unwrap();
    let net = r#""horizon": 1.0, "components": [{"phi": 1.0, "delta": 1.5}, {"weight": 0.5, "phi": 2.0, "delta": 4.0}], "rho": -0.2"#;
    let configs = [
        format!(r#"{{"scenario": "ray", {net}}}"#),
        format!(r#"{{"scenario": "queue", {net}, "state": {{"u": 0.2, "x": [0.1, -0.1], "v": 0.3}}, "h": 0.5}}"#),
        format!(r#"{{"scenario": "pinned-queue", {net}, "w": 0.6, "z": 0.1, "h": 0.3}}"#),
        format!(r#"{{"scenario": "pinned-queue", {net}, "w": 0.6, "z": 0.1}}"#),
        r#"{"scenario": "option", "s0": 100, "phi": 0.08, "delta": 2.0, "horizon": 1.0, "strike": 100, "rate": 0.05, "maturity": 1.0}"#.to_string(),
        r#"{"scenario": "embedded", "motion_rate": 0.2, "bridges": [{"phi": 1.0, "period": 1.0}]}"#.to_string(),
    ];
    for (i, c) in configs.iter().enumerate() {
        let cfg = write_config(&dir, &format!("c{i}.json"), c);
        let out = dir.path().join(format!("c{i}.csv"));
        let o = bray(&["eval", "--config", s(&cfg), "--out", s(&out)]);
        assert!(o.status.success(), "{c}: {}", String::from_utf8_lossy(&o.stderr));
        let (header, rows) = read_csv(&out);
        assert!(header.len() >= 2 && !rows.is_empty());
        assert!(rows.iter().flatten().all(|v| v.is_finite()));
    }
}

#[test]
fn invalid_delta_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"scenario": "queue", "horizon": 2.0, "components": [{"phi": 1.0, "delta": 1.0}], "h": 0.5}"#,
    );
    let out = dir.path().join("bad.csv");
    for cmd in ["eval", "simulate"] {
        let o = bray(&[cmd, "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
    }
}

#[test]
fn malformed_json_and_missing_file_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", "{not json");
    let out = dir.path().join("x.csv");
    assert_eq!(bray(&["eval", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(bray(&["eval", "--config", s(&missing), "--out", s(&out)]).status.code(), Some(2));
    assert_eq!(bray(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "q.json",
        r#"{"scenario": "queue", "horizon": 1.0, "components": [{"phi": 1.0, "delta": 1.2}], "rho": -0.1,
            "h": 1.0, "grid": {"points": 50}, "mc": {"n_paths": 3000, "seed": 9}}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(bray(&["simulate", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(bray(&["simulate", "--config", s(&cfg), "--out", s(&b)]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn simulated_bridge_like_variance() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "ray.json",
        r#"{"scenario": "ray", "horizon": 1.0, "components": [{"phi": 1.0, "delta": 1.05}],
            "grid": {"times": [0.5, 1.0]}, "mc": {"n_paths": 100000, "seed": 4}}"#,
    );
    let out = dir.path().join("ray.csv");
    assert!(bray(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["t", "mean", "variance"]);
    // φ (s/δ)(1 - s/δ) at s = 0.5.
    let want = 0.5 / 1.05 * (1.0 - 0.5 / 1.05);
    let se = want * (2.0 / 100_000f64).sqrt();
    assert!((rows[0][2] - want).abs() < 4.0 * se, "{} vs {want}", rows[0][2]);
}

#[test]
fn reflected_full_paths_are_regulated() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "q.json",
        r#"{"scenario": "queue", "horizon": 1.0, "components": [{"phi": 1.0, "delta": 1.05}], "rho": -0.5,
            "state": {"u": 0.0, "v": 0.2}, "h": 1.0, "reflection": "grid", "grid": {"points": 40}, "mc": {"n_paths": 200, "seed": 1}}"#,
    );
    let out = dir.path().join("full.csv");
    assert!(bray(&["simulate", "--config", s(&cfg), "--out", s(&out), "--full-paths"]).status.success());
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["path", "t", "netinput", "queue", "lost"]);
    assert_eq!(rows.len(), 200 * 40);
    for path in rows.chunks(40) {
        assert!(path.iter().all(|r| r[3] >= 0.0));
        assert!(path.windows(2).all(|w| w[1][4] >= w[0][4]));
        // q = v + netinput + lost.
        assert!(path.iter().all(|r| (r[3] - (0.2 + r[2] + r[4])).abs() < 1e-12));
    }
    assert!(rows.iter().any(|r| r[4] > 0.0));
}

#[test]
fn verify_reports_and_exit_codes() {
    let o = bray(&["verify", "--suite", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_bray"))
        .args(["verify", "--suite", "core", "--paths", "20000"])
        .env("BRAY_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = String::from_utf8_lossy(&o.stdout);
    assert!(report.lines().next().unwrap().contains("seed=77 (seed from BRAY_SEED=77)"));
    assert!(report.lines().filter(|l| l.starts_with("[PASS]")).count() >= 7);
    let o = Command::new(env!("CARGO_BIN_EXE_bray"))
        .args(["verify", "--suite", "core", "--paths", "20000"])
        .env("BRAY_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
