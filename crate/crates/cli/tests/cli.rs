use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aos-swarm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn run_writes_record_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        &[
            "run",
            "--variant",
            "aos-pso",
            "--seed",
            "1",
            "--out",
            "d",
            "--time-limit",
            "4",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["curve.csv", "trajectory.json", "config.toml"] {
        assert!(dir.path().join("d").join(f).is_file(), "{f}");
    }
    let curve = fs::read_to_string(dir.path().join("d/curve.csv")).unwrap();
    assert!(curve
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("step,sim_time_s,branch"));
}

#[test]
fn run_requires_seed_variant_and_out() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&bin(
            &["run", "--variant", "aos-pso", "--out", "d"],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&bin(&["run", "--seed", "1", "--out", "d"], dir.path())),
        2
    );
    assert_eq!(
        code(&bin(
            &["run", "--seed", "1", "--variant", "aos-pso"],
            dir.path()
        )),
        2
    );
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&bin(
            &["run", "--variant", "bogus", "--seed", "1", "--out", "d"],
            p
        )),
        2
    );
    assert_eq!(code(&bin(&["frobnicate"], p)), 2);
    assert_eq!(
        code(&bin(
            &[
                "run",
                "--variant",
                "aos-pso",
                "--seed",
                "1",
                "--out",
                "d",
                "--set",
                "novalue"
            ],
            p
        )),
        2
    );
    assert_eq!(
        code(&bin(
            &[
                "run",
                "--variant",
                "aos-pso",
                "--seed",
                "1",
                "--out",
                "d",
                "--speed",
                "0"
            ],
            p
        )),
        3
    );
    assert_eq!(
        code(&bin(
            &[
                "run",
                "--variant",
                "aos-pso",
                "--seed",
                "1",
                "--out",
                "d",
                "--set",
                "nonsense=1"
            ],
            p
        )),
        3
    );
    assert_eq!(
        code(&bin(
            &[
                "run",
                "--variant",
                "aos-pso",
                "--seed",
                "1",
                "--out",
                "d",
                "--config",
                "missing.toml"
            ],
            p
        )),
        4
    );
    assert_eq!(code(&bin(&["analyze", "nowhere"], p)), 4);
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "time_limit = 3.0\n[params]\nn = 6\n",
    )
    .unwrap();
    let o = bin(
        &[
            "run",
            "--config",
            "c.toml",
            "--variant",
            "aos-apso-tuned",
            "--seed",
            "2",
            "--out",
            "d",
            "--set",
            "params.c3=4.0",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let echo = fs::read_to_string(dir.path().join("d/config.toml")).unwrap();
    assert!(echo.contains("n = 6"));
    assert!(echo.contains("c3 = 4.0"));
    assert!(echo.contains("time_limit = 3.0"));
    assert!(echo.contains("variant = \"aos-apso-tuned\""));
}

#[test]
fn batch_analyze_and_rerun_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&bin(&["batch", "--out", "a", "--time-limit", "5"], p)),
        0
    );
    assert_eq!(
        code(&bin(
            &["batch", "--out", "b", "--time-limit", "5", "--sequential"],
            p
        )),
        0
    );
    let mut curves = 0;
    for variant in [
        "aos-pso",
        "aos-pso-stabilized",
        "aos-apso-tuned",
        "aos-apso-untuned",
    ] {
        for file in [
            "mean_curve.csv",
            "ef_histogram.csv",
            "init0/curve.csv",
            "init2/trajectory.json",
        ] {
            let rel = format!("{variant}/{file}");
            assert_eq!(
                fs::read(p.join("a").join(&rel)).unwrap(),
                fs::read(p.join("b").join(&rel)).unwrap(),
                "{rel}"
            );
        }
        for k in 0..3 {
            assert!(p.join(format!("a/{variant}/init{k}/curve.csv")).is_file());
            curves += 1;
        }
    }
    assert_eq!(curves, 12);
    let comparison = fs::read(p.join("a/comparison.csv")).unwrap();
    fs::remove_file(p.join("a/comparison.csv")).unwrap();
    assert_eq!(code(&bin(&["analyze", "a"], p)), 0);
    assert_eq!(fs::read(p.join("a/comparison.csv")).unwrap(), comparison);
}

#[test]
fn scene_generate_then_run_on_it() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&bin(
            &["scene", "generate", "--seed", "5", "--out", "s.json"],
            p
        )),
        0
    );
    let o = bin(&["scene", "inspect", "s.json"], p);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("occluders     500"));
    let o = bin(
        &[
            "run",
            "--variant",
            "aos-pso-stabilized",
            "--seed",
            "1",
            "--scene",
            "s.json",
            "--out",
            "d",
            "--time-limit",
            "2",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&bin(&["scene", "inspect", "absent.json"], p)), 4);
}
