//! Subcommand implementations.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hessketch::mmio;
use hessketch::problems::{make_deblur, make_tomography};
use hessketch::solvers::{SolveResult, SolverKind};
use hessketch::{CounterSnapshot, Problem};

use crate::config::{
    parse_nonnegative, parse_positive, parse_seed, ConfigError, ExperimentConfig, PivotChoice, ProblemConfig,
    ProblemSpec, SolverEntry,
};
use crate::output::write_atomic;

/// Failure of a subcommand. Configuration problems exit with 2, everything
/// else with 1.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Solver { failed: Vec<String> },
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => e.fmt(f),
            RunError::Solver { failed } => write!(f, "solver failure in: {} (see *.error.txt)", failed.join(", ")),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", path.display()))
}

/// Flags shared by all subcommands.
#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub diagnostics: bool,
    pub timing: bool,
}

pub fn build_problem(p: &ProblemConfig) -> Result<Problem, ConfigError> {
    let built = match p.spec {
        ProblemSpec::Deblur { size, psf } => make_deblur(size, psf, p.noise_level, p.seed),
        ProblemSpec::Tomography { grid, angles } => make_tomography(grid, angles, p.noise_level, p.seed),
    };
    built.map_err(|e| ConfigError::new(None, "problem", e.to_string()))
}

/// Condensed outcome of one solver run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub label: String,
    pub kind: SolverKind,
    pub iterations: usize,
    pub termination: String,
    /// Smallest relative error and the iteration attaining it.
    pub min_rel_err: Option<(f64, usize)>,
    pub final_rel_err: Option<f64>,
    /// `‖b − A·x‖` of the returned iterate, recomputed here.
    pub final_res_norm: f64,
    pub counters: CounterSnapshot,
}

impl RunSummary {
    fn new(label: &str, kind: SolverKind, problem: &Problem, res: &SolveResult<f64>) -> Result<Self, RunError> {
        let mut min: Option<(f64, usize)> = None;
        for r in &res.trace.records {
            if let Some(e) = r.rel_err {
                if min.is_none_or(|(m, _)| e < m) {
                    min = Some((e, r.iter));
                }
            }
        }
        let last = res.trace.last();
        Ok(Self {
            label: label.to_string(),
            kind,
            iterations: res.trace.len(),
            termination: res.termination.to_string(),
            min_rel_err: min,
            final_rel_err: last.and_then(|r| r.rel_err),
            final_res_norm: residual_norm(problem, &res.x)
                .map_err(|e| RunError::Io(format!("residual of {label}: {e}")))?,
            counters: last.map(|r| r.counters).unwrap_or_default(),
        })
    }
}

pub fn residual_norm(problem: &Problem, x: &[f64]) -> hessketch::Result<f64> {
    let ax = problem.operator().apply(x)?;
    Ok(problem.b().iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum::<f64>().sqrt())
}

fn prepare_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn put(path: PathBuf, bytes: &[u8]) -> Result<(), RunError> {
    write_atomic(&path, bytes).map_err(io_err(&path))
}

fn csv_bytes(rows: Vec<Vec<String>>) -> Result<Vec<u8>, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).map_err(|e| RunError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| RunError::Io(e.to_string()))
}

/// Writes `<stem>.trace.csv`, `<stem>.solution.mm`, `<stem>.recon.pgm` for
/// image problems and retained factors as `<stem>.<name>.mm`.
fn write_result(dir: &Path, stem: &str, problem: &Problem, res: &SolveResult<f64>) -> Result<(), RunError> {
    let trace = res.trace.to_csv_string().map_err(|e| RunError::Io(e.to_string()))?;
    put(dir.join(format!("{stem}.trace.csv")), trace.as_bytes())?;
    let mut buf = Vec::new();
    mmio::write_vector(&mut buf, &res.x).map_err(|e| RunError::Io(e.to_string()))?;
    put(dir.join(format!("{stem}.solution.mm")), &buf)?;
    if let Some(img) = problem.to_image(&res.x) {
        put(dir.join(format!("{stem}.recon.pgm")), &img.to_pgm_bytes())?;
    }
    if let Some(factors) = &res.factors {
        for (name, m) in &factors.matrices {
            let mut buf = Vec::new();
            mmio::write_dense(&mut buf, m).map_err(|e| RunError::Io(e.to_string()))?;
            put(dir.join(format!("{stem}.{name}.mm")), &buf)?;
        }
        for (name, p) in &factors.pivots {
            let v: Vec<f64> = p.iter().map(|&i| (i + 1) as f64).collect();
            let mut buf = Vec::new();
            mmio::write_vector(&mut buf, &v).map_err(|e| RunError::Io(e.to_string()))?;
            put(dir.join(format!("{stem}.{name}.mm")), &buf)?;
        }
    }
    Ok(())
}

fn write_failure(dir: &Path, stem: &str, err: &hessketch::Error) -> Result<(), RunError> {
    put(dir.join(format!("{stem}.error.txt")), format!("{err}\n").as_bytes())
}

fn run_entry(problem: &Problem, entry: &SolverEntry, opts: Options) -> hessketch::Result<SolveResult<f64>> {
    entry.kind.solve(&problem.system(), &entry.solver_config(opts.diagnostics, opts.timing))
}

/// Runs every configured solver and writes its outputs. Failing solvers get
/// an error file; the others still run.
fn run_all(cfg: &ExperimentConfig, opts: Options) -> Result<Vec<(RunSummary, SolveResult<f64>)>, RunError> {
    let problem = build_problem(&cfg.problem)?;
    prepare_dir(&cfg.output_dir)?;
    let mut done = Vec::new();
    let mut failed = Vec::new();
    for entry in &cfg.solvers {
        match run_entry(&problem, entry, opts) {
            Ok(res) => {
                write_result(&cfg.output_dir, &entry.label, &problem, &res)?;
                done.push((RunSummary::new(&entry.label, entry.kind, &problem, &res)?, res));
            }
            Err(e) => {
                write_failure(&cfg.output_dir, &entry.label, &e)?;
                eprintln!("{}: {e}", entry.label);
                failed.push(entry.label.clone());
            }
        }
    }
    if failed.is_empty() {
        Ok(done)
    } else {
        Err(RunError::Solver { failed })
    }
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into())
}

pub fn summary_text(runs: &[RunSummary]) -> String {
    let mut s = format!(
        "{:<16} {:<6} {:>5} {:<10} {:>13} {:>6} {:>13} {:>13} {:>8} {:>8} {:>6} {:>8}\n",
        "label", "solver", "iters", "stop", "min_rel_err", "argmin", "final_rel_err", "final_res", "matvecs",
        "tmatvecs", "dots", "sketches"
    );
    for r in runs {
        s += &format!(
            "{:<16} {:<6} {:>5} {:<10} {:>13} {:>6} {:>13} {:>13.6e} {:>8} {:>8} {:>6} {:>8}\n",
            r.label,
            r.kind.name(),
            r.iterations,
            r.termination,
            opt_sci(r.min_rel_err.map(|m| m.0)),
            r.min_rel_err.map(|m| m.1.to_string()).unwrap_or_else(|| "-".into()),
            opt_sci(r.final_rel_err),
            r.final_res_norm,
            r.counters.matvec_count,
            r.counters.transpose_matvec_count,
            r.counters.dot_product_count,
            r.counters.sketch_apply_count,
        );
    }
    s
}

pub fn cmd_solve(cfg: &ExperimentConfig, opts: Options) -> Result<Vec<RunSummary>, RunError> {
    Ok(run_all(cfg, opts)?.into_iter().map(|(s, _)| s).collect())
}

/// Runs at least two solvers on one problem and writes `compare.csv` in long
/// format (`solver,iter,metric,value`) with `summary.txt`.
pub fn cmd_compare(cfg: &ExperimentConfig, opts: Options) -> Result<Vec<RunSummary>, RunError> {
    if cfg.solvers.len() < 2 {
        return Err(ConfigError::new(None, "solver", "compare needs at least two solvers").into());
    }
    let runs = run_all(cfg, opts)?;
    let mut rows = vec![vec!["solver".into(), "iter".into(), "metric".into(), "value".into()]];
    for (summary, res) in &runs {
        for (metric, series) in res.trace.metric_series() {
            for (iter, v) in series {
                rows.push(vec![summary.label.clone(), iter.to_string(), metric.into(), format!("{v:e}")]);
            }
        }
        for r in &res.trace.records {
            let c = r.counters;
            for (metric, v) in [
                ("matvecs", c.matvec_count),
                ("tmatvecs", c.transpose_matvec_count),
                ("dots", c.dot_product_count),
                ("sketches", c.sketch_apply_count),
            ] {
                rows.push(vec![summary.label.clone(), r.iter.to_string(), metric.into(), v.to_string()]);
            }
        }
    }
    put(cfg.output_dir.join("compare.csv"), &csv_bytes(rows)?)?;
    let summaries: Vec<RunSummary> = runs.into_iter().map(|(s, _)| s).collect();
    put(cfg.output_dir.join("summary.txt"), summary_text(&summaries).as_bytes())?;
    Ok(summaries)
}

/// Parameters accepted by `sweep`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Lambda,
    Seed,
    SketchRows,
    SampleSize,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::Seed => "seed",
            SweepParam::SketchRows => "sketch_rows",
            SweepParam::SampleSize => "sample_size",
        }
    }

    /// Whether varying this parameter changes the run of `entry`.
    pub fn applies_to(self, entry: &SolverEntry) -> bool {
        match self {
            SweepParam::Lambda => entry.kind.supports_lambda(),
            SweepParam::Seed => entry.kind.is_sketched() || matches!(entry.pivot, PivotChoice::Sampled(_)),
            SweepParam::SketchRows => entry.kind.is_sketched(),
            SweepParam::SampleSize => entry.kind.uses_pivoting(),
        }
    }

    fn parse_value(self, s: &str) -> Result<SweepValue, String> {
        Ok(match self {
            SweepParam::Lambda => SweepValue::Lambda(parse_nonnegative(s)?),
            SweepParam::Seed => SweepValue::Seed(parse_seed(s)?),
            SweepParam::SketchRows => SweepValue::SketchRows(parse_positive(s)?),
            SweepParam::SampleSize if s == "full" => SweepValue::Pivot(PivotChoice::Full),
            SweepParam::SampleSize => SweepValue::Pivot(PivotChoice::Sampled(parse_positive(s)?)),
        })
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [SweepParam::Lambda, SweepParam::Seed, SweepParam::SketchRows, SweepParam::SampleSize]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown sweep parameter `{s}` (expected lambda, seed, sketch_rows or sample_size)"))
    }
}

#[derive(Clone, Copy, Debug)]
enum SweepValue {
    Lambda(f64),
    Seed(u64),
    SketchRows(usize),
    Pivot(PivotChoice),
}

impl SweepValue {
    fn apply(self, entry: &SolverEntry) -> SolverEntry {
        let mut e = entry.clone();
        match self {
            SweepValue::Lambda(l) => e.lambda = l,
            SweepValue::Seed(s) => {
                e.seed = s;
                e.pivot_seed = None;
            }
            SweepValue::SketchRows(r) => e.sketch_rows = Some(r),
            SweepValue::Pivot(p) => e.pivot = p,
        }
        e
    }
}

/// One row of `sweep.csv`.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: String,
    pub summary: RunSummary,
}

/// Runs every applicable solver once per value. Jobs run on scoped threads,
/// each with its own copy of the problem; results do not depend on the
/// thread count.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    param: SweepParam,
    values: &[String],
    opts: Options,
) -> Result<Vec<SweepRow>, RunError> {
    let field = "--values";
    if values.is_empty() {
        return Err(ConfigError::new(None, field, "no sweep values given").into());
    }
    let parsed = values
        .iter()
        .map(|v| param.parse_value(v).map_err(|m| ConfigError::new(None, field, format!("`{v}`: {m}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<&SolverEntry> = cfg.solvers.iter().filter(|e| param.applies_to(e)).collect();
    if targets.is_empty() {
        return Err(ConfigError::new(
            None,
            "--param",
            format!("`{}` does not apply to any configured solver", param.name()),
        )
        .into());
    }
    let problem = build_problem(&cfg.problem)?;
    prepare_dir(&cfg.output_dir)?;

    let jobs: Vec<(usize, usize)> =
        (0..targets.len()).flat_map(|s| (0..parsed.len()).map(move |v| (s, v))).collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len());
    let mut results: Vec<Option<hessketch::Result<SolveResult<f64>>>> = (0..jobs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let (jobs, targets, parsed, problem_cfg) = (&jobs, &targets, &parsed, &cfg.problem);
                scope.spawn(move || {
                    let local = build_problem(problem_cfg).expect("problem was built once already");
                    (t..jobs.len())
                        .step_by(threads)
                        .map(|j| {
                            let (s, v) = jobs[j];
                            (j, run_entry(&local, &parsed[v].apply(targets[s]), opts))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (j, r) in h.join().expect("sweep worker panicked") {
                results[j] = Some(r);
            }
        }
    });

    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (j, &(s, v)) in jobs.iter().enumerate() {
        let entry = targets[s];
        let stem = format!("{}.{}-{}", entry.label, param.name(), values[v]);
        match results[j].take().expect("every job ran") {
            Ok(res) => {
                write_result(&cfg.output_dir, &stem, &problem, &res)?;
                rows.push(SweepRow {
                    value: values[v].clone(),
                    summary: RunSummary::new(&entry.label, entry.kind, &problem, &res)?,
                });
            }
            Err(e) => {
                write_failure(&cfg.output_dir, &stem, &e)?;
                eprintln!("{stem}: {e}");
                failed.push(stem);
            }
        }
    }

    let mut csv_rows = vec![[
        "solver",
        "param",
        "value",
        "iterations",
        "min_rel_err",
        "argmin_iter",
        "final_rel_err",
        "final_res_norm",
    ]
    .map(String::from)
    .to_vec()];
    let or_empty = |v: Option<String>| v.unwrap_or_default();
    for r in &rows {
        let s = &r.summary;
        csv_rows.push(vec![
            s.label.clone(),
            param.name().into(),
            r.value.clone(),
            s.iterations.to_string(),
            or_empty(s.min_rel_err.map(|m| format!("{:e}", m.0))),
            or_empty(s.min_rel_err.map(|m| m.1.to_string())),
            or_empty(s.final_rel_err.map(|e| format!("{e:e}"))),
            format!("{:e}", s.final_res_norm),
        ]);
    }
    put(cfg.output_dir.join("sweep.csv"), &csv_bytes(csv_rows)?)?;
    put(cfg.output_dir.join("sweep_summary.txt"), sweep_summary(param, &targets, &rows).as_bytes())?;

    if failed.is_empty() {
        Ok(rows)
    } else {
        Err(RunError::Solver { failed })
    }
}

/// Mean and sample standard deviation; the deviation is 0 for one value.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn sweep_summary(param: SweepParam, targets: &[&SolverEntry], rows: &[SweepRow]) -> String {
    let mut s = format!(
        "sweep over {}\n{:<16} {:>6} {:>15} {:>15} {:>15} {:>15}\n",
        param.name(),
        "label",
        "runs",
        "mean_final_res",
        "std_final_res",
        "mean_final_err",
        "std_final_err"
    );
    for t in targets {
        let mine: Vec<&RunSummary> = rows.iter().map(|r| &r.summary).filter(|r| r.label == t.label).collect();
        if mine.is_empty() {
            continue;
        }
        let (rm, rs) = mean_std(&mine.iter().map(|r| r.final_res_norm).collect::<Vec<_>>());
        let errs: Vec<f64> = mine.iter().filter_map(|r| r.final_rel_err).collect();
        let (em, es) = if errs.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&errs) };
        s += &format!(
            "{:<16} {:>6} {:>15.6e} {:>15.6e} {:>15.6e} {:>15.6e}\n",
            t.label,
            mine.len(),
            rm,
            rs,
            em,
            es
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_matches_hand_values() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sweep_values_parse_per_parameter() {
        assert!(matches!(SweepParam::Lambda.parse_value("0.5"), Ok(SweepValue::Lambda(l)) if l == 0.5));
        assert!(SweepParam::Lambda.parse_value("-1").is_err());
        assert!(matches!(
            SweepParam::SampleSize.parse_value("full"),
            Ok(SweepValue::Pivot(PivotChoice::Full))
        ));
        assert!(matches!(
            SweepParam::SampleSize.parse_value("5"),
            Ok(SweepValue::Pivot(PivotChoice::Sampled(5)))
        ));
        assert!(SweepParam::SketchRows.parse_value("0").is_err());
        assert!("tolerance".parse::<SweepParam>().is_err());
        assert_eq!("sketch_rows".parse::<SweepParam>(), Ok(SweepParam::SketchRows));
    }
}
