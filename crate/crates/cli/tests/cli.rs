//! End-to-end CLI behavior: exit codes, config validation, determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anosov-lab"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const ALG: &str = r#"
backend = "algebraic"
lambda0 = 1.0
dt = 0.01
orbit_time = 60.0
ensemble = 2
seed = 9
"#;

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, &format!("{ALG}\nmystery_knob = 3\n"));
    let status = bin()
        .args(["entropy", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bad_backend_name_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    write(&cfg, "backend = \"torus\"\ndt = 0.01\norbit_time = 10.0\n");
    let status = bin()
        .args(["orbit", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn hopf_entropy_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hopf.toml");
    write(&cfg, "backend = \"hopf\"\ndt = 0.01\norbit_time = 10.0\n");
    let out = bin()
        .args(["entropy", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not Anosov"), "stderr: {stderr}");
}

#[test]
fn identities_pass_on_every_backend() {
    let configs = [
        ALG.to_string(),
        "backend = \"hopf\"\ndt = 0.01\norbit_time = 60.0\nensemble = 2\nseed = 4\n".into(),
        "backend = \"suspension\"\ndelta = 0.3\ndt = 0.005\norbit_time = 120.0\nseed = 5\n".into(),
        concat!(
            "backend = \"perturbed\"\n",
            "bump_center_x = [0.15]\nbump_center_y = [0.1]\nbump_amplitude = [0.015]\n",
            "bump_width = 0.8\ndt = 0.01\norbit_time = 60.0\nseed = 6\n"
        )
        .into(),
    ];
    for (i, text) in configs.iter().enumerate() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        write(&cfg, text);
        let out = bin()
            .args(["identities", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join("out"))
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "config {i} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn identical_configs_give_byte_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, ALG);
    for run in ["a", "b"] {
        let status = bin()
            .args(["entropy", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(run))
            .status()
            .unwrap();
        assert!(status.success());
    }
    for seed in [9u64, 10] {
        let a = std::fs::read(dir.path().join(format!("a/entropy_orbit_{seed}.csv"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("b/entropy_orbit_{seed}.csv"))).unwrap();
        assert_eq!(a, b, "orbit {seed} differs between runs");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, ALG);
    for (run, threads) in [("t1", "1"), ("t4", "4")] {
        let status = bin()
            .args(["energy", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(run))
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.path().join("t1/energy.csv")).unwrap();
    let b = std::fs::read(dir.path().join("t4/energy.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_headers_match_the_interface() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(
        &cfg,
        "backend = \"suspension\"\ndelta = 0.3\ndt = 0.005\norbit_time = 200.0\nseed = 5\nuniformize_windows = [1.0]\n",
    );
    let status = bin()
        .args(["uniformize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("out/uniformize_T0.csv")).unwrap();
    assert!(text.starts_with("t,r_u,r_uT,x_r_uT,A_T,B_T\n"));
}
