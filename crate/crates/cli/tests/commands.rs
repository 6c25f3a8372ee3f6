use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gradcert::gradlike::Status;
use gradcert_cli::{cmd_deform, cmd_fixture, grid_export, parse_problem, CliError, ExportField};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradcert"))
}

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(format!("{name}.toml"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn cubic_quartic_passes_one_and_fails_two() {
    let out = run(&["check", "--spec", problem("cubic_quartic").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["task"], "check");
    assert_eq!(v["verdicts"]["condition1"]["status"], "pass");
    assert_eq!(v["verdicts"]["condition1"]["caveat"], "grid-verified, not a proof");
    assert_eq!(v["verdicts"]["condition2"]["status"], "fail");
    assert!(v["verdicts"]["condition2"]["witness"].is_object());
    assert_eq!(v["decay_profiles"][0]["radii"].as_array().unwrap().len(), 9);
}

#[test]
fn radial_scaling_deformation_passes() {
    let out = run(&["deform", "--spec", problem("radial_deform").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn cotangent_fixture_passes() {
    let out = run(&["fixture", "cotangent", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = cmd_fixture("cotangent", 1, None).unwrap();
    assert_eq!(r.exit_code(), 0);
    assert!(r.certificate.is_some());
    assert!(matches!(cmd_fixture("sphere", 1, None), Err(CliError::Usage(_))));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "missing.toml", "dim = 1\nphi = \"x^3\"\n");
    let out = run(&["check", "--spec", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`X`"));

    let shape = write(
        dir.path(),
        "shape.toml",
        "dim = 2\nphi = \"x\"\nX = [\"1\", \"0\"]\ng = [[1, 0, 0], [0, 1, 0]]\n",
    );
    let out = run(&["check", "--spec", shape.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2×3"));

    let bad = write(dir.path(), "bad.toml", "dim = 1\nphi = \"x^\"\nX = [\"x\"]\n");
    let out = run(&["check", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 2"));

    let out = run(&["check", "--spec", dir.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("report.json");
    let out = run(&[
        "stein",
        "--spec",
        problem("stein_disc").to_str().unwrap(),
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(v["verdicts"]["j_convex"]["status"], "pass");
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn grid_n_override_and_seed_are_accepted() {
    let path = problem("eliashberg");
    let a = run(&["check", "--spec", path.to_str().unwrap(), "--grid-n", "17", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v["verdicts"]["condition2"]["margin"].as_f64().unwrap() > 0.3);
}

#[test]
fn stein_saddle_reports_witness() {
    let out = run(&["stein", "--spec", problem("stein_saddle").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let w = &v["verdicts"]["j_convex"]["witness"];
    assert!(w["values"]["margin"].as_f64().unwrap() <= 0.0);
}

#[test]
fn homotopy_reports_every_step() {
    let spec = gradcert_cli::load_problem(&problem("radial_bump_homotopy")).unwrap();
    let r = cmd_deform(&spec).unwrap();
    assert_eq!(r.deformation.len(), 11);
    assert_eq!(r.deformation[10].t, Some(1.0));
    assert_eq!(r.verdicts["deformation"].status, Status::Pass);
}

#[test]
fn deformation_failure_is_a_fail_verdict() {
    let spec = parse_problem(
        "dim = 2\nphi = \"(x^2 + y^2)/4\"\nX = [\"x/2\", \"y/2\"]\nomega = [[\"0\", \"-1\"], [\"1\", \"0\"]]\n\
         g = [[1, 0], [0, 1]]\nphi_tilde = \"-(x^2 + y^2)/4\"\n",
    )
    .unwrap();
    let r = cmd_deform(&spec).unwrap();
    assert_eq!(r.verdicts["deformation"].status, Status::Fail);
    assert_eq!(r.exit_code(), 1);
}

#[test]
fn lyapunov_export_of_bump_pair_skips_the_zero() {
    let mut spec = gradcert_cli::load_problem(&problem("bump")).unwrap();
    spec.grid_n = 201;
    let csv = grid_export(&spec, ExportField::Lyapunov).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,value");
    assert_eq!(lines.len(), 201);
    for row in &lines[1..] {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        let expect = if cells[0] < 0.0 { 0.5 } else { 0.4 };
        assert!((cells[1] - expect).abs() < 1e-12, "{row}");
    }
    assert!(!csv.contains('\r'));
}

#[test]
fn vector_export_and_dimension_limit() {
    let spec = parse_problem("dim = 2\ngrid_n = 3\nphi = \"x\"\nX = [\"x\", \"y\"]\n").unwrap();
    let csv = grid_export(&spec, ExportField::X).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,y,X_x,X_y");
    assert_eq!(lines.len(), 10);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    // 17 significant digits
    assert_eq!(lines[1].split(',').next().unwrap(), "-1.0000000000000000e0");

    let spec = parse_problem("dim = 4\ngrid_n = 3\nphi = \"x1\"\nX = [\"1\", \"0\", \"0\", \"0\"]\n").unwrap();
    assert!(matches!(grid_export(&spec, ExportField::Phi), Err(CliError::UnsupportedDim(4))));

    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "four.toml", "dim = 4\ngrid_n = 3\nphi = \"x1\"\nX = [\"1\", \"0\", \"0\", \"0\"]\n");
    let out = run(&["export", "--spec", p.to_str().unwrap(), "--field", "phi"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_cap_does_not_change_output() {
    let path = problem("bump");
    let a = run(&["check", "--spec", path.to_str().unwrap()]);
    let b = bin()
        .args(["check", "--spec", path.to_str().unwrap()])
        .env("GRADCERT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}
