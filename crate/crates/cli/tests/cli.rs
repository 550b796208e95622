use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, format!("output_dir = out\n{body}")).unwrap();
    path
}

fn hessketch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hessketch"))
        .args(args)
        .env_remove("HESSKETCH_SEED")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = hessketch(args);
    assert!(
        out.status.success(),
        "hessketch {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const DEBLUR32: &str = "problem.type = deblur\nproblem.size = 32\nproblem.psf = gaussian\nproblem.sigma = 1\nproblem.noise_level = 0.01\n";
const TOMO: &str = "problem.type = tomography\nproblem.size = 16\nproblem.angles = 12\nproblem.noise_level = 0.01\nproblem.seed = 2\n";

#[test]
fn gmres_deblur_writes_thirty_trace_rows_and_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{DEBLUR32}solver.gmres.name = gmres\n"));
    run_ok(&["solve", cfg.to_str().unwrap()]);
    let trace = read(dir.path(), "gmres.trace.csv");
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(
        lines[0],
        "iter,res_norm,sres_norm,proj_obj,rel_err,kappa_basis,kappa_dbar,eps_embed,matvecs,tmatvecs,dots,sketches,wall_ms"
    );
    assert_eq!(lines.len(), 31);
    assert_eq!(trace.matches("iter,").count(), 1);
    let solution = read(dir.path(), "gmres.solution.mm");
    assert!(solution.starts_with("%%MatrixMarket matrix array real general"));
    let pgm = fs::read(dir.path().join("out/gmres.recon.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n32 32\n"));
}

#[test]
fn unknown_solver_is_a_config_error_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{DEBLUR32}solver.a.name = bicgstab\n"));
    let out = hessketch(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("solver.a.name") && err.contains("line 7"), "{err}");
}

#[test]
fn square_only_solver_on_tomography_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.a.name = cmrh\n"));
    let out = hessketch(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{TOMO}diagnostics = true\nsolver.a.name = slslu\nsolver.a.pivot = sampled\nsolver.a.sample_size = 25\nsolver.a.seed = 3\nsolver.b.name = lsqr\n"
    );
    let cfg = write_config(dir.path(), &body);
    let snapshot = || -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(dir.path().join("out"))
            .unwrap()
            .map(|e| e.unwrap())
            .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
            .collect();
        files.sort();
        files
    };
    run_ok(&["compare", cfg.to_str().unwrap()]);
    let first = snapshot();
    run_ok(&["compare", cfg.to_str().unwrap()]);
    assert_eq!(first, snapshot());
    assert!(first.iter().any(|(n, _)| n == "compare.csv"));
    assert!(!first.iter().any(|(n, _)| n.ends_with(".tmp")));
}

#[test]
fn compare_requires_two_solvers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.a.name = lsqr\n"));
    let out = hessketch(&["compare", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_long_format_and_summary() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{TOMO}solver.lsqr.name = lsqr\nsolver.lslu.name = lslu\nsolver.slslu.name = slslu\nsolver.slslu.pivot = sampled\nsolver.slslu.sample_size = 25\n"
    );
    let cfg = write_config(dir.path(), &body);
    run_ok(&["compare", cfg.to_str().unwrap(), "--diagnostics"]);
    let csv = read(dir.path(), "compare.csv");
    assert!(csv.starts_with("solver,iter,metric,value\n"));
    for label in ["lsqr", "lslu", "slslu"] {
        assert!(csv.contains(&format!("\n{label},30,res_norm,")));
        assert!(csv.contains(&format!("\n{label},1,rel_err,")));
    }
    assert!(csv.contains("\nslslu,30,dots,0\n"));
    let summary = read(dir.path(), "summary.txt");
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.contains("min_rel_err") && summary.contains("final_res"));
}

#[test]
fn same_solver_with_different_seeds_gives_distinct_traces() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{TOMO}solver.a.name = slslu\nsolver.a.seed = 1\nsolver.b.name = slslu\nsolver.b.seed = 2\n"
    );
    let cfg = write_config(dir.path(), &body);
    run_ok(&["compare", cfg.to_str().unwrap()]);
    assert_ne!(read(dir.path(), "a.trace.csv"), read(dir.path(), "b.trace.csv"));
    let csv = read(dir.path(), "compare.csv");
    assert!(csv.contains("\na,1,") && csv.contains("\nb,1,"));
}

#[test]
fn lambda_sweep_at_zero_equals_unregularized_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.s.name = slslu\nsolver.s.seed = 5\n"));
    run_ok(&["solve", cfg.to_str().unwrap()]);
    run_ok(&["sweep", cfg.to_str().unwrap(), "--param", "lambda", "--values", "0,0.1"]);
    assert_eq!(read(dir.path(), "s.trace.csv"), read(dir.path(), "s.lambda-0.trace.csv"));
    assert_ne!(read(dir.path(), "s.trace.csv"), read(dir.path(), "s.lambda-0.1.trace.csv"));
    let sweep = read(dir.path(), "sweep.csv");
    assert!(sweep.starts_with("solver,param,value,iterations,min_rel_err,argmin_iter,final_rel_err,final_res_norm\n"));
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn full_sample_size_sweep_matches_full_pivoting() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{TOMO}solver.full.name = slslu\nsolver.s.name = slslu\nsolver.s.pivot = sampled\nsolver.s.sample_size = 5\n"),
    );
    run_ok(&["solve", cfg.to_str().unwrap()]);
    run_ok(&["sweep", cfg.to_str().unwrap(), "--param", "sample_size", "--values", "5,25,full"]);
    assert_eq!(read(dir.path(), "full.trace.csv"), read(dir.path(), "s.sample_size-full.trace.csv"));
    assert_eq!(read(dir.path(), "s.trace.csv"), read(dir.path(), "s.sample_size-5.trace.csv"));
    assert_eq!(read(dir.path(), "sweep.csv").lines().count(), 7);
}

#[test]
fn seed_sweep_reports_mean_and_std() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.s.name = slslu\nsolver.s.maxiter = 10\nsolver.l.name = lsqr\n"));
    let seeds: Vec<String> = (0..20).map(|s| s.to_string()).collect();
    run_ok(&["sweep", cfg.to_str().unwrap(), "--param", "seed", "--values", &seeds.join(",")]);
    let sweep = read(dir.path(), "sweep.csv");
    assert_eq!(sweep.lines().count(), 21, "lsqr is not seed dependent and is skipped");
    let summary = read(dir.path(), "sweep_summary.txt");
    let row = summary.lines().find(|l| l.starts_with("s ")).unwrap();
    let fields: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(fields[1], "20");
    let mean: f64 = fields[2].parse().unwrap();
    let std: f64 = fields[3].parse().unwrap();
    let finals: Vec<f64> = sweep.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    let expect = finals.iter().sum::<f64>() / 20.0;
    assert!((mean - expect).abs() <= 1e-6 * expect);
    assert!(std > 0.0);
}

#[test]
fn sweep_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.l.name = lsqr\n"));
    let c = cfg.to_str().unwrap();
    assert_eq!(hessketch(&["sweep", c, "--param", "lambda", "--values", ""]).status.code(), Some(2));
    assert_eq!(hessketch(&["sweep", c, "--param", "sketch_rows", "--values", "100"]).status.code(), Some(2));
    assert_eq!(hessketch(&["sweep", c, "--param", "lambda", "--values", "abc"]).status.code(), Some(2));
    assert_eq!(hessketch(&["sweep", c, "--param", "tolerance", "--values", "1"]).status.code(), Some(2));
}

#[test]
fn seed_environment_variable_overrides_all_seeds() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.s.name = slslu\nsolver.s.seed = 11\n"));
    let c = cfg.to_str().unwrap();
    let with_env = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_hessketch")).args(["solve", c]).env("HESSKETCH_SEED", seed).output().unwrap();
        (out.status.code(), read(dir.path(), "s.trace.csv"))
    };
    let (code, a) = with_env("7");
    assert_eq!(code, Some(0));
    let (_, b) = with_env("7");
    let (_, c2) = with_env("8");
    assert_eq!(a, b);
    assert_ne!(a, c2);
    let out = Command::new(env!("CARGO_BIN_EXE_hessketch")).args(["solve", c]).env("HESSKETCH_SEED", "seven").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_one_and_writes_error_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.s.name = slslu\nsolver.s.maxiter = 10\nsolver.l.name = lsqr\n"));
    let out = hessketch(&["sweep", cfg.to_str().unwrap(), "--param", "sketch_rows", "--values", "5,40"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("out/s.sketch_rows-5.error.txt").exists());
    assert!(dir.path().join("out/s.sketch_rows-40.trace.csv").exists());
}

#[test]
fn keep_factors_dumps_matrices() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{TOMO}solver.s.name = lslu\nsolver.s.maxiter = 5\nsolver.s.keep_factors = true\n"));
    run_ok(&["solve", cfg.to_str().unwrap()]);
    let names: Vec<String> = fs::read_dir(dir.path().join("out")).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    for f in ["s.L.mm", "s.D.mm", "s.H.mm"] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
}
