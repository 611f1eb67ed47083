use std::path::Path;
use std::process::{Command, Output};

fn hbac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbac")).args(args).output().expect("spawn hbac")
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.cfg");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "# tiny run\nservo_rate_hz = 25\nsuccess_steps = 200\ntrial_limit = 20\nmodel_steps = 200\n");
    let out = dir.path().join("out");
    let o = hbac(&["run", "--config", &cfg, "--seeds", "1,2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trials.csv", "series.csv", "summary.csv", "phases.csv", "config.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("architecture,servo_rate_hz,ll_mode,experiments,successes,n_ave,m_ave"));
    assert!(lines.next().unwrap().starts_with("single_indirect,25"));
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert!(trials.starts_with("seed,trial,steps,terminal_reason,mean_delta_plan\n"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_cfg(dir.path(), "trial_limit = -3\n");
    let o = hbac(&["run", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trial_limit"));

    let o = hbac(&["run", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = hbac(&["run", "--config", &bad, "--profile", "huge"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gradcheck_passes() {
    let o = hbac(&["gradcheck", "--configs", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.ends_with(" ok")).count(), 6, "{text}");
}

#[test]
fn phase_runs_need_two_levels() {
    let dir = tempfile::tempdir().unwrap();
    let single = write_cfg(dir.path(), "architecture = single_indirect\n");
    assert_eq!(hbac(&["phase", "--only", "I", "--config", &single]).status.code(), Some(1));

    let two = write_cfg(dir.path(), "architecture = two_level_indirect\n");
    let o = hbac(&["phase", "--only", "I", "--config", &two, "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains(" I trials"));
    assert_eq!(hbac(&["phase", "--only", "V", "--config", &two]).status.code(), Some(1));
}
