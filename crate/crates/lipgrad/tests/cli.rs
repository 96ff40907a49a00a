//! Binary-level checks: flags, config-file merging, exit codes and artifact
//! emission.

use std::path::Path;
use std::process::{Command, Output};

fn lipgrad(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lipgrad"));
    cmd.args(args);
    cmd.env_remove("LIPGRAD_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    lipgrad(args).output().expect("spawn lipgrad")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_builtin_writes_trial_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let result = run(&[
        "solve",
        "--function",
        "shifted_sphere",
        "--rbar",
        "2.0",
        "--eps",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let text = stdout_of(&result);
    assert!(text.contains("stop: converged"));
    assert!(text.contains("best_value:"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("trial_index,x1,x2,f,grad1,grad2\n"));
    assert!(csv.lines().last().unwrap().starts_with("# summary:"));
}

#[test]
fn solve_is_replay_deterministic_at_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let args = |path: &Path| {
        vec![
            "solve".to_string(),
            "--gkls".into(),
            "1:12".into(),
            "--rbar".into(),
            "2.8".into(),
            "--out".into(),
            path.to_str().unwrap().to_string(),
        ]
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, _) in [(&a, 0), (&b, 1)] {
        let out = lipgrad(&[])
            .args(args(path))
            .output()
            .expect("spawn");
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn budget_exhaustion_exits_with_code_4() {
    let result = run(&[
        "solve",
        "--function",
        "rastrigin",
        "--dim",
        "2",
        "--eps",
        "0",
        "--max-trials",
        "20",
    ]);
    assert_eq!(result.status.code(), Some(4));
    assert!(stdout_of(&result).contains("stop: budget-exhausted"));
}

#[test]
fn conflicting_problem_flags_exit_with_code_2() {
    let result = run(&["solve", "--function", "sphere", "--gkls", "1:1"]);
    assert_eq!(result.status.code(), Some(2));
    let neither = run(&["solve"]);
    assert_eq!(neither.status.code(), Some(2));
}

#[test]
fn unknown_function_exits_with_code_2() {
    let result = run(&["solve", "--function", "nope"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lipgrad.cfg");
    std::fs::write(
        &cfg,
        "# solver setup\nfunction = shifted_sphere\nrbar = 2.0\neps = 1e-3\nmax-trials = 50000\n",
    )
    .unwrap();
    let from_file = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(from_file.status.success());

    // a flag overrides the file: an absurd budget of 2 trials exhausts
    let overridden = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--max-trials",
        "2",
    ]);
    assert_eq!(overridden.status.code(), Some(4));

    let broken = dir.path().join("broken.cfg");
    std::fs::write(&broken, "rbar\n").unwrap();
    let bad = run(&["solve", "--config", broken.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn gkls_describe_and_eval() {
    let describe = run(&["gkls", "describe", "--class", "1", "--index", "58"]);
    assert!(describe.status.success());
    let text = stdout_of(&describe);
    assert!(text.contains("class 1 index 58 dimension 2"));
    assert!(text.contains("ball 1:"));

    let eval = run(&[
        "gkls", "eval", "--class", "1", "--index", "58", "--point", "0.1,-0.2",
    ]);
    assert!(eval.status.success());
    let text = stdout_of(&eval);
    assert!(text.starts_with("f: "));
    assert!(text.contains("grad: "));

    let outside = run(&[
        "gkls", "eval", "--class", "1", "--index", "58", "--point", "3,0",
    ]);
    assert_eq!(outside.status.code(), Some(3));
}

#[test]
fn seed_env_var_changes_the_class() {
    let base = stdout_of(&run(&["gkls", "describe", "--class", "1", "--index", "1"]));
    let mut cmd = lipgrad(&["gkls", "describe", "--class", "1", "--index", "1"]);
    cmd.env("LIPGRAD_SEED", "999");
    let seeded = stdout_of(&cmd.output().unwrap());
    assert_ne!(base, seeded);

    let mut flagged = lipgrad(&[
        "gkls", "describe", "--class", "1", "--index", "1", "--seed", "999",
    ]);
    flagged.env("LIPGRAD_SEED", "999");
    assert_eq!(stdout_of(&flagged.output().unwrap()), seeded);
}

#[test]
fn bench_and_plot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let bench_dir = dir.path().join("bench");
    // a tiny budget keeps this fast; every run just exhausts it
    let bench = run(&[
        "bench",
        "--classes",
        "1",
        "--methods",
        "direct,directl",
        "--budget",
        "40",
        "--out",
        bench_dir.to_str().unwrap(),
    ]);
    assert!(bench.status.success(), "{}", String::from_utf8_lossy(&bench.stderr));
    assert!(bench_dir.join("records_class1_direct.csv").exists());
    assert!(bench_dir.join("oc_class1.svg").exists());

    let svg = dir.path().join("combined.svg");
    let plot = run(&[
        "plot",
        "--in",
        bench_dir.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(plot.status.success(), "{}", String::from_utf8_lossy(&plot.stderr));
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg"));
    assert!(body.contains("class1_direct"));
    assert!(body.contains("class1_directl"));
}

#[test]
fn bad_class_list_exits_with_code_2() {
    let result = run(&["bench", "--classes", "0-9", "--out", "/tmp/nope"]);
    assert_eq!(result.status.code(), Some(2));
}
