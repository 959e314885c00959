use std::process::{Command, Output};

use poseamm::io::{parse_sweep_csv, split_rows};

fn poseamm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poseamm"))
        .args(args)
        .env_remove("POSEAMM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// `rotation a b c ...` and `translation x y z` lines back into numbers.
fn numbers_after(text: &str, key: &str) -> Vec<f64> {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no '{key}' in\n{text}"));
    line.split_whitespace().skip(1).map(|f| f.parse().unwrap()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn noiseless_bench_recovers_every_trial() {
    let out = poseamm(&["bench", "absolute-central", "--trials", "5", "--noise", "0:1:0", "--seed", "7"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (rows, summary) = split_rows(parse_sweep_csv(&stdout(&out)).unwrap());
    assert!(summary.is_empty());
    for solver in ["amm-gpnp", "amm-upnp"] {
        let mine: Vec<_> = rows.iter().filter(|r| r.solver_name == solver).collect();
        assert_eq!(mine.len(), 5, "{solver}");
        for r in mine {
            assert!(r.rot_err_frobenius < 1e-6, "{solver} trial {}: {}", r.trial_index, r.rot_err_frobenius);
        }
    }
}

#[test]
fn bench_without_timing_is_reproducible() {
    let args = ["bench", "relative-noncentral", "--trials", "3", "--noise", "0:2:4", "--seed", "11", "--no-timing", "--summary"];
    let a = poseamm(&args);
    let b = poseamm(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 1 + 9 + 3);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(5) == Some("0") || l.contains(",mean,")));
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["bench", "absolute-noncentral", "--trials", "4", "--noise", "0:5:10", "--no-timing"];
    let one = Command::new(env!("CARGO_BIN_EXE_poseamm")).args(args).env("POSEAMM_THREADS", "1").output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_poseamm")).args(args).env("POSEAMM_THREADS", "4").output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn bench_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = poseamm(&["bench", "absolute-central", "--trials", "2", "--noise", "1", "--solver", "amm-upnp", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let (rows, _) = split_rows(parse_sweep_csv(&std::fs::read_to_string(&path).unwrap()).unwrap());
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.solver_name == "amm-upnp" && r.noise_sigma == 1.0));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = poseamm(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn help_and_version_succeed() {
    for flag in ["--help", "--version"] {
        let out = poseamm(&[flag]);
        assert_eq!(out.status.code(), Some(0), "{flag}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn solver_not_suited_to_problem_is_a_usage_error() {
    let out = poseamm(&["bench", "absolute-central", "--trials", "1", "--solver", "amm-gec"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("amm-gec"));
}

#[test]
fn bad_noise_grid_is_a_usage_error() {
    let out = poseamm(&["bench", "absolute-central", "--noise", "0:0:3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_then_solve_recovers_the_pose() {
    let dir = tempfile::tempdir().unwrap();
    for (problem, solvers) in [
        ("absolute-central", &["amm-gpnp", "amm-upnp"][..]),
        ("absolute-noncentral", &["amm-gpnp", "amm-upnp"][..]),
        ("relative-noncentral", &["amm-gec"][..]),
    ] {
        let path = dir.path().join(format!("{problem}.txt"));
        let gen = poseamm(&["generate", problem, "--seed", "5", "--points", "30", "--out", path.to_str().unwrap()]);
        assert!(gen.status.success(), "{}", stderr(&gen));
        let truth = stdout(&gen);
        for solver in solvers {
            let sol = poseamm(&["solve", "--input", path.to_str().unwrap(), "--solver", solver]);
            assert!(sol.status.success(), "{problem} {solver}: {}", stderr(&sol));
            let text = stdout(&sol);
            let dr = max_abs_diff(&numbers_after(&text, "rotation"), &numbers_after(&truth, "rotation"));
            let dt = max_abs_diff(&numbers_after(&text, "translation"), &numbers_after(&truth, "translation"));
            assert!(dr < 1e-6 && dt < 1e-6, "{problem} {solver}: rotation {dr:e}, translation {dt:e}");
            assert!(text.contains("converged true"));
        }
    }
}

#[test]
fn solve_accepts_an_initial_translation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.txt");
    let gen = poseamm(&["generate", "absolute-noncentral", "--seed", "9", "--out", path.to_str().unwrap()]);
    let truth = stdout(&gen);
    let sol = poseamm(&["solve", "--input", path.to_str().unwrap(), "--solver", "amm-gpnp", "--t0", "-1,0.5,2", "--init", "identity"]);
    assert!(sol.status.success(), "{}", stderr(&sol));
    let dt = max_abs_diff(&numbers_after(&stdout(&sol), "translation"), &numbers_after(&truth, "translation"));
    assert!(dt < 1e-4, "{dt:e}");
}

#[test]
fn absolute_file_with_relative_solver_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("abs.txt");
    poseamm(&["generate", "absolute-central", "--out", path.to_str().unwrap()]);
    let out = poseamm(&["solve", "--input", path.to_str().unwrap(), "--solver", "amm-gec"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("absolute"));
}

#[test]
fn malformed_record_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "absolute\n1 2 3 0 0 1 0 0 0\n# comment\n1 2 3 0 0 1 0 0\n").unwrap();
    let out = poseamm(&["solve", "--input", path.to_str().unwrap(), "--solver", "amm-gpnp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

#[test]
fn missing_input_file_is_reported() {
    let out = poseamm(&["solve", "--input", "/nonexistent/scene.txt", "--solver", "amm-gpnp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"));
}

#[test]
fn too_few_correspondences_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("few.txt");
    let gen = poseamm(&["generate", "relative-noncentral", "--points", "20", "--out", path.to_str().unwrap()]);
    assert!(gen.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let short: Vec<&str> = text.lines().take(11).collect();
    std::fs::write(&path, short.join("\n")).unwrap();
    let out = poseamm(&["solve", "--input", path.to_str().unwrap(), "--solver", "amm-gec"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}
