use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chainrisk"));
    c.env_remove("CHAINRISK_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn snapshot_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots")
}

#[test]
fn help_snapshots() {
    let cases: [(&str, &[&str]); 7] = [
        ("root", &["--help"]),
        ("bound", &["bound", "--help"]),
        ("simulate", &["simulate", "--help"]),
        ("verify", &["verify", "--help"]),
        ("rates", &["rates", "--help"]),
        ("orlicz", &["orlicz", "--help"]),
        ("cover", &["cover", "--help"]),
    ];
    let update = std::env::var_os("UPDATE_SNAPSHOTS").is_some();
    for (name, args) in cases {
        let out = run(args);
        assert_eq!(code(&out), 0);
        let text = String::from_utf8(out.stdout).unwrap();
        let path = snapshot_dir().join(format!("{name}.txt"));
        if update {
            fs::create_dir_all(snapshot_dir()).unwrap();
            fs::write(&path, &text).unwrap();
        } else {
            let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing snapshot {}", path.display()));
            assert_eq!(text, expected, "help for {name} changed");
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["bound", "--n", "5"])), 2);
    assert_eq!(code(&run(&["bound", "--preset", "constrained-gaussian", "--n", "0"])), 2);
    assert_eq!(code(&run(&["bound", "--config", "/nonexistent/config.json"])), 2);
    assert_eq!(code(&run(&["bound", "--preset", "no-such-preset", "--n", "10"])), 2);
    assert_eq!(code(&run(&["simulate", "--bogus-flag"])), 2);
    assert_eq!(code(&run(&["verify", "--reps", "0"])), 2);
    assert_eq!(code(&run(&[])), 2);
}

#[test]
fn malformed_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\"problem\": 3}").unwrap();
    assert_eq!(code(&run(&["bound", "--config", path.to_str().unwrap(), "--n", "100"])), 2);
    assert_eq!(code(&run(&["simulate", "--config", path.to_str().unwrap()])), 2);
}

#[test]
fn bound_preset_is_positive() {
    let out = run(&["bound", "--preset", "constrained-gaussian", "--n", "1000"]);
    assert_eq!(code(&out), 0);
    let total = json(&out)["total"].as_f64().unwrap();
    assert!(total > 0.0 && total.is_finite());
    // Regression value for this preset.
    assert!((total - 42769.24785209525).abs() <= 1e-6 * total, "total = {total}");
}

#[test]
fn bound_grid_and_generic_constants() {
    let out = run(&["bound", "--preset", "ridge-dn"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out).as_array().unwrap().len(), 4);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("generic.json");
    let cfg = serde_json::json!({
        "n": 100,
        "constants": {
            "gamma": 0.1, "b_apx": 0.0, "t_env": 2.0, "s": 1.0, "q": 2.0, "r": 0.5,
            "theta": 1.0, "r0": 0.0, "entropy": {"kind": "zero"}, "eps": 0.3, "delta": 0.3
        }
    });
    fs::write(&path, cfg.to_string()).unwrap();
    let out = run(&["bound", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let total = json(&out)["total"].as_f64().unwrap();
    let expected = ((40.0f64).ln() / 100.0 + 8.0 * 0.3 * 2.0) / 0.5;
    assert!((total - expected).abs() < 1e-12);
}

fn simulate(dir: &Path, workers: &str) -> Output {
    run(&[
        "simulate",
        "--preset",
        "constrained-gaussian",
        "--trials",
        "40",
        "--seed",
        "7",
        "--workers",
        workers,
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn simulate_is_deterministic_and_rates_match() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&simulate(&a, "1")), 0);
    assert_eq!(code(&simulate(&b, "4")), 0);
    let csv_a = fs::read(a.join("results.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("results.csv")).unwrap());

    let out = run(&["rates", a.join("results.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json(&out), summary["rate_fit"]);
}

#[test]
fn workers_env_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("CHAINRISK_WORKERS", "0")
        .args(["simulate", "--preset", "constrained-gaussian", "--trials", "30", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn orlicz_gaussian() {
    let out = run(&["orlicz", "--dist", "gaussian", "--q", "2", "--n", "1000000"]);
    assert_eq!(code(&out), 0);
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - (8.0f64 / 3.0).sqrt()).abs() <= 0.02, "value = {v}");
}

#[test]
fn orlicz_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    fs::write(&path, "1,0\n0,1\n-1,0\n").unwrap();
    let out = run(&["orlicz", "--input", path.to_str().unwrap(), "--q", "2"]);
    assert_eq!(code(&out), 0);
    // Every row has norm 1, so E e^{1/B²} = 2 gives B = 1/√ln 2.
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 1.0 / std::f64::consts::LN_2.sqrt()).abs() < 1e-5, "value = {v}");
}

#[test]
fn cover_ball() {
    let out = run(&["cover", "--ball", "2", "--eps", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let size = v["size"].as_f64().unwrap();
    assert!(size <= v["entropy_ball"].as_f64().unwrap().exp());
    assert_eq!(code(&run(&["cover", "--ball", "2", "--eps", "0"])), 2);
}

#[test]
fn verify_default_passes_and_is_deterministic() {
    let a = run(&["verify", "--reps", "300"]);
    let b = run(&["verify", "--reps", "300"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["passed"], serde_json::Value::Bool(true));
}
