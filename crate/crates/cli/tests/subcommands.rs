use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use craftlearn::dynamics::rollout;
use craftlearn_cli::config::load_config;
use craftlearn_cli::io::{read_learn_log, read_tape, read_trajectory};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn craftlearn(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_craftlearn"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn learn_then_rollout_reproduces_final_cost() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("minimal.cfg");
    let learned = craftlearn(dir.path(), &["learn", s(&cfg)]);
    assert_eq!(
        learned.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&learned.stderr)
    );
    let log = read_learn_log(&dir.path().join("learn_log.csv")).unwrap();
    let final_cost = log.last().unwrap().real_cost;
    assert!(stdout(&learned).contains(&format!("final real cost {final_cost:.16e}")));

    let tape = dir.path().join("learn_tape.csv");
    let rolled = craftlearn(dir.path(), &["rollout", s(&cfg), s(&tape), "--system", "true"]);
    assert_eq!(rolled.status.code(), Some(0));
    let line = stdout(&rolled)
        .lines()
        .find(|l| l.starts_with("cost "))
        .unwrap()
        .to_string();
    let cost: f64 = line["cost ".len()..].parse().unwrap();
    assert!((cost - final_cost).abs() <= 1e-9 * final_cost.abs().max(1.0));

    let replay = read_trajectory(&dir.path().join("rollout_trajectory.csv")).unwrap();
    let learned_traj = read_trajectory(&dir.path().join("learn_trajectory.csv")).unwrap();
    assert_eq!(replay, learned_traj);
}

#[test]
fn rollout_on_the_model_uses_model_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("minimal.cfg");
    assert_eq!(craftlearn(dir.path(), &["ddp-run", s(&cfg)]).status.code(), Some(0));
    let tape = dir.path().join("ddp_tape.csv");
    let o = craftlearn(dir.path(), &["rollout", s(&cfg), s(&tape), "--system", "model"]);
    assert_eq!(o.status.code(), Some(0));
    let c = load_config(&cfg).unwrap();
    let expected = rollout(
        &c.approx_model().unwrap(),
        &read_tape(&tape).unwrap(),
        &c.s0().unwrap().to_vector(),
    )
    .unwrap();
    assert_eq!(
        read_trajectory(&dir.path().join("rollout_trajectory.csv")).unwrap(),
        expected
    );
    assert_eq!(
        read_trajectory(&dir.path().join("ddp_model_trajectory.csv")).unwrap(),
        expected
    );
}

#[test]
fn compare_with_itself_is_all_ties() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("deck.cfg");
    let traj = fixture("colliding.csv");
    let o = craftlearn(dir.path(), &["compare", s(&cfg), s(&traj), s(&traj)]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.ends_with(",tie")), "{text}");
    for name in [
        "velocity.csv",
        "deviation.csv",
        "jerk.csv",
        "work.csv",
        "rotation.csv",
        "path.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn metrics_on_colliding_fixture_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = craftlearn(
        dir.path(),
        &["metrics", s(&fixture("deck.cfg")), s(&fixture("colliding.csv"))],
    );
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("collision error     yes (first at step 3)"), "{out}");
    assert!(dir.path().join("metrics_summary.csv").exists());
    assert!(dir.path().join("metrics_series.csv").exists());
}

#[test]
fn metrics_on_clean_trajectory_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    // no deck in this config, so the same descent is clean
    let o = craftlearn(
        dir.path(),
        &["metrics", s(&fixture("minimal.cfg")), s(&fixture("colliding.csv"))],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("metrics_summary.csv")).unwrap();
    assert!(summary.starts_with("metric,value\n"));
    assert!(summary.contains("\nduration,2.0000000000000000e0\n"));
}

#[test]
fn config_and_io_problems_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(
        &bad,
        "[craft]\nmass = -1\n[task]\nwaypoints = 0,0; 1,0\nhorizon = 10\ndt = 0.1\n",
    )
    .unwrap();
    let o = craftlearn(dir.path(), &["ddp-run", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass > 0"));

    let o = craftlearn(
        dir.path(),
        &["metrics", s(&fixture("minimal.cfg")), s(&dir.path().join("none.csv"))],
    );
    assert_eq!(o.status.code(), Some(1));

    let o = craftlearn(dir.path(), &["ddp-run", s(&dir.path().join("none.cfg"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn wrong_length_tape_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let tape = dir.path().join("short.csv");
    std::fs::write(&tape, "k,thrust,torque\n0,9.8,0\n1,9.8,0\n").unwrap();
    let o = craftlearn(dir.path(), &["rollout", s(&fixture("minimal.cfg")), s(&tape)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon mismatch"));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn emitted_files_are_byte_identical_across_runs() {
    let cfg = fixture("minimal.cfg");
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            for cmd in ["ddp-run", "learn", "baseline"] {
                assert_eq!(craftlearn(dir.path(), &[cmd, s(&cfg)]).status.code(), Some(0), "{cmd}");
            }
            let a = dir.path().join("learn_trajectory.csv");
            let b = dir.path().join("baseline_trajectory.csv");
            assert_eq!(
                craftlearn(dir.path(), &["compare", s(&cfg), s(&a), s(&b)])
                    .status
                    .code(),
                Some(0)
            );
            snapshot(dir.path())
        })
        .collect();
    assert_eq!(runs[0].len(), 14);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn out_flag_overrides_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("a/b");
    let o = craftlearn(&nested, &["baseline", s(&fixture("minimal.cfg"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(nested.join("baseline_tape.csv").exists());
}
