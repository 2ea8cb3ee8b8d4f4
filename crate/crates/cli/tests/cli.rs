use std::fs;
use std::process::{Command, Output};

fn quadlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn enumerate_counts_small_balls() {
    let o = quadlab(&["--T", "2", "enumerate"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("x0,x1,x2,x3,norm\n"));
    assert_eq!(s.lines().count(), 31);
    let o = quadlab(&["--T", "1.5", "enumerate"]);
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn dichotomy_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 11, "n_directions": 5, "checkpoints": [30, 300]}"#).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = cfg.to_str().unwrap();
    let o = quadlab(&["--config", cfg, "--out", a.to_str().unwrap(), "dichotomy"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = quadlab(&["--config", cfg, "--sequential", "--out", b.to_str().unwrap(), "dichotomy"]);
    assert!(o.status.success());
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 2);
    // flags override the file
    let o = quadlab(&["--config", cfg, "--N", "2", "dichotomy"]);
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 2);
    assert_eq!(stdout(&o).lines().nth(1), text.lines().nth(1));
}

#[test]
fn exit_codes() {
    let o = quadlab(&["--T", "1e6", "--budget", "1000", "cusp-hits"]);
    assert_eq!(o.status.code(), Some(3));
    let o = quadlab(&["selfcheck", "--tolerance", "1e-15"]);
    assert_eq!(o.status.code(), Some(2));
    let o = quadlab(&["--N", "0", "dichotomy"]);
    assert_eq!(o.status.code(), Some(2));
    let o = quadlab(&["--psi", "powerlaw:eps=1", "classify"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_and_cusp_hits() {
    let o = quadlab(&["--psi", "powerlaw:eps=1,s=1.01", "classify"]);
    assert!(stdout(&o).lines().nth(1).unwrap().contains(",3,convergent,"));
    let o = quadlab(&["--T", "200", "cusp-hits", "--direction", "[0.4242640687119285, 0.5656854249492381, 0, 0.7071067811865475]"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("x0,x1,x2,x3,norm,direction_error,psi\n"));
    for line in s.lines().skip(1) {
        let x: Vec<i64> = line.split(',').take(4).map(|c| c.parse().unwrap()).collect();
        assert_eq!(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - x[3] * x[3], 1);
    }
    let o = quadlab(&["cusp-hits", "--direction", "[1, 0, 0, 0]"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_and_examples_pass() {
    let o = quadlab(&["selfcheck"]);
    assert!(o.status.success());
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((j["det_phi"].as_f64().unwrap() - 1.0).abs() < 1e-4);
    assert!(j["dv_du_plus_error"].as_f64().unwrap() < 1e-5);
    assert!(j["lemma_uzav_fitted_l"].as_f64().unwrap().is_finite());
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"examples": {"y_max": 500}}"#).unwrap();
    let o = quadlab(&["--config", cfg.to_str().unwrap(), "examples"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| l.contains(",true,")).count(), 4);
}

#[test]
fn volume_and_gamma_tables() {
    let o = quadlab(&["--psi", "const:eps=0.1", "volume", "--t-values", "1,2", "--mc", "20000"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().count(), 3);
    for line in s.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (v, mv, se): (f64, f64, f64) = (f[2].parse().unwrap(), f[4].parse().unwrap(), f[5].parse().unwrap());
        assert!((v - mv).abs() <= 4.0 * se, "{line}");
    }
    let o = quadlab(&["gamma-count", "--t-values", "1,2"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("t,count,lower_bound_flag\n1,"));
}
