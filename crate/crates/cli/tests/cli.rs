//! End-to-end checks of the binary: exit codes, determinism, output shape.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyncubes"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const MINIMAL_CUBE: &str = r#"
experiment = "CUBE_SAMPLE"
d = 2
seed = 1

[system]
kind = "ROTATION"
alpha = "0.618033988749895"

[[schedule]]
n_max = 10
grid = 10
"#;

#[test]
fn systems_lists_builtins() {
    let out = bin().arg("systems").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ROTATION"));
    assert!(text.contains("AFFINE_SKEW"));
    assert!(text.contains("STURMIAN"));
}

#[test]
fn cube_sample_row_bound_and_success() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", MINIMAL_CUBE);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["cube", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = fs::read_to_string(out_dir.join("cube_sample_profiles.csv")).unwrap();
    assert!(csv.lines().count() <= 1 + 10 * 21 * 21);
}

#[test]
fn invalid_config_exits_64_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "experiment = \"CUBE_SAMPLE\"\nd = ?\n");
    let out = bin().args(["cube", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line"), "stderr should locate the error: {err}");
}

#[test]
fn wrong_subcommand_for_experiment_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", MINIMAL_CUBE);
    let out = bin().args(["rp", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn budget_overflow_exits_65() {
    let text = MINIMAL_CUBE.replace("n_max = 10", "n_max = 5000").replace("grid = 10", "grid = 1000");
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = bin()
        .args(["cube", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(65), "{out:?}");
}

#[test]
fn identity_saturation_exits_zero() {
    let text = r#"
experiment = "SATURATION"
d = 2
seed = 3
n_trials = 4

[system]
kind = "ROTATION"
alpha = "0.618033988749895"

[factor]
kind = "IDENTITY"

[[schedule]]
n_max = 2
grid = 2

[[schedule]]
n_max = 4
grid = 2

[[schedule]]
n_max = 6
grid = 2
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", text);
    let out = bin()
        .args(["saturation", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn reruns_identical_and_threads_flag_harmless() {
    let text = r#"
experiment = "RP_ESTIMATE"
d = 1
seed = 11

[system]
kind = "AFFINE_SKEW"
alpha = "0.618033988749895"
dim = 2

[x]
coords = [0.0, 0.0]

[y]
coords = [0.0, 0.5]

[[schedule]]
n_max = 10
grid = 4

[[schedule]]
n_max = 20
grid = 4
"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", text);
    let (d1, d2) = (dir.path().join("o1"), dir.path().join("o2"));
    let s1 = bin()
        .args(["rp", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&d1)
        .output()
        .unwrap();
    let s2 = bin()
        .args(["rp", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&d2)
        .args(["--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(s1.status.code(), s2.status.code());
    let c1 = fs::read(d1.join("rp_estimate_profiles.csv")).unwrap();
    let c2 = fs::read(d2.join("rp_estimate_profiles.csv")).unwrap();
    assert_eq!(c1, c2, "profiles must not depend on worker count");
}
