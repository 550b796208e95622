//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! problem.type = tomography        # deblur | tomography
//! problem.size = 48                # pixels per side
//! problem.angles = 36              # tomography only, default = size
//! problem.psf = motion             # deblur only: gaussian | motion
//! problem.sigma = 1.0              # gaussian PSF
//! problem.length = 15              # motion PSF, pixels
//! problem.angle = 30               # motion PSF, degrees
//! problem.noise_level = 0.01
//! problem.seed = 1
//! output_dir = results             # relative to the config file
//! diagnostics = true
//!
//! solver.a.name = slslu            # gmres | lsqr | cmrh | lslu | scmrh | slslu
//! solver.a.maxiter = 30
//! solver.a.pivot = sampled         # full | sampled
//! solver.a.sample_size = 25
//! solver.a.pivot_seed = 7          # default: derived from seed
//! solver.a.sketch_rows = 310       # default: 10·(maxiter + 1)
//! solver.a.lambda = 0
//! solver.a.seed = 0
//! solver.a.label = slslu-25        # output file prefix, default: the id
//! solver.a.assembly = column       # scmrh: column | product
//! solver.a.tikhonov_sketch = basis # basis | pre-elimination
//! solver.a.keep_factors = false    # dump bases and projected matrices
//! ```
//!
//! Solvers run in order of first appearance.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hessketch::hessenberg::PivotStrategy;
use hessketch::problems::Psf;
use hessketch::rng::derive_seed;
use hessketch::solvers::{SketchAssembly, SolverConfig, SolverKind, TikhonovSketch};

const PIVOT_SEED_STREAM: u64 = 3;

/// A configuration problem, reported with exit code 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config error at line {line}, field `{}`: {}", self.field, self.message),
            None => write!(f, "config error, field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Deblur { size: usize, psf: Psf },
    Tomography { grid: usize, angles: usize },
}

impl ProblemSpec {
    pub fn is_square(&self) -> bool {
        matches!(self, ProblemSpec::Deblur { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub spec: ProblemSpec,
    pub noise_level: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotChoice {
    Full,
    Sampled(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverEntry {
    pub id: String,
    pub label: String,
    pub kind: SolverKind,
    pub maxiter: usize,
    pub pivot: PivotChoice,
    pub pivot_seed: Option<u64>,
    pub sketch_rows: Option<usize>,
    pub lambda: f64,
    pub seed: u64,
    pub assembly: SketchAssembly,
    pub tikhonov_sketch: TikhonovSketch,
    pub keep_factors: bool,
}

impl SolverEntry {
    pub fn solver_config(&self, diagnostics: bool, timing: bool) -> SolverConfig<f64> {
        let pivot_seed = self.pivot_seed.unwrap_or_else(|| derive_seed(self.seed, PIVOT_SEED_STREAM));
        let pivot = match self.pivot {
            PivotChoice::Full => PivotStrategy::full(),
            PivotChoice::Sampled(size) => PivotStrategy::sampled(size, pivot_seed),
        };
        let mut cfg = SolverConfig::default()
            .with_maxiter(self.maxiter)
            .with_pivot(pivot)
            .with_lambda(self.lambda)
            .with_seed(self.seed)
            .with_diagnostics(diagnostics);
        cfg.sketch_rows = self.sketch_rows;
        cfg.sketch_assembly = self.assembly;
        cfg.tikhonov_sketch = self.tikhonov_sketch;
        cfg.record_timing = timing;
        cfg.keep_factors = self.keep_factors;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub solvers: Vec<SolverEntry>,
    pub output_dir: PathBuf,
    pub diagnostics: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(None, "config", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses `text`; a relative `output_dir` is resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let entries = tokenize(text)?;
        let mut fields = Fields { entries };
        let problem = parse_problem(&mut fields)?;
        let output_dir = fields
            .take("output_dir")
            .map(|(v, _)| PathBuf::from(v))
            .unwrap_or_else(|| PathBuf::from("hessketch-out"));
        let output_dir = if output_dir.is_absolute() { output_dir } else { base.join(output_dir) };
        let diagnostics = fields.parse_or("diagnostics", false, parse_bool)?;
        let solvers = parse_solvers(&mut fields, &problem)?;
        if let Some((key, line)) = fields.remaining().first() {
            return Err(ConfigError::new(Some(*line), key.clone(), "unknown field"));
        }
        Ok(Self {
            problem,
            solvers,
            output_dir,
            diagnostics,
        })
    }

    /// Replaces every seed, as done for the `HESSKETCH_SEED` override.
    pub fn override_seeds(&mut self, seed: u64) {
        self.problem.seed = seed;
        for s in &mut self.solvers {
            s.seed = seed;
            s.pivot_seed = None;
        }
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
    order: usize,
}

fn tokenize(text: &str) -> Result<HashMap<String, Entry>, ConfigError> {
    let mut out: HashMap<String, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::new(Some(line), content, "expected `key = value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::new(Some(line), "", "empty key"));
        }
        if let Some(prev) = out.get(key) {
            return Err(ConfigError::new(
                Some(line),
                key,
                format!("duplicate key, first set at line {}", prev.line),
            ));
        }
        let order = out.len();
        out.insert(
            key.to_string(),
            Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
                order,
            },
        );
    }
    Ok(out)
}

struct Fields {
    entries: HashMap<String, Entry>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key).map(|e| (e.value, e.line))
    }

    fn parse_or<V>(&mut self, key: &str, default: V, parse: fn(&str) -> Result<V, String>) -> Result<V, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => parse(&v).map_err(|m| ConfigError::new(Some(line), key, m)),
        }
    }

    fn require<V>(&mut self, key: &str, parse: fn(&str) -> Result<V, String>) -> Result<(V, usize), ConfigError> {
        match self.take(key) {
            None => Err(ConfigError::new(None, key, "required field is missing")),
            Some((v, line)) => parse(&v).map(|x| (x, line)).map_err(|m| ConfigError::new(Some(line), key, m)),
        }
    }

    fn remaining(&self) -> Vec<(String, usize)> {
        let mut rest: Vec<&Entry> = self.entries.values().collect();
        rest.sort_by_key(|e| e.line);
        rest.into_iter().map(|e| (e.key.clone(), e.line)).collect()
    }
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{s}`")),
    }
}

pub fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("expected a positive integer, got `{s}`")),
    }
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("expected a 64-bit unsigned integer, got `{s}`"))
}

pub fn parse_nonnegative(s: &str) -> Result<f64, String> {
    match f64::from_str(s) {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("expected a finite nonnegative number, got `{s}`")),
    }
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match f64::from_str(s) {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got `{s}`")),
    }
}

fn parse_string(s: &str) -> Result<String, String> {
    if s.is_empty() {
        Err("must not be empty".into())
    } else {
        Ok(s.to_string())
    }
}

fn parse_problem(f: &mut Fields) -> Result<ProblemConfig, ConfigError> {
    let (kind, kind_line) = f.require("problem.type", parse_string)?;
    let (size, _) = f.require("problem.size", parse_positive)?;
    let noise_level = f.parse_or("problem.noise_level", 0.01, parse_nonnegative)?;
    let seed = f.parse_or("problem.seed", 0, parse_seed)?;
    let reject = |f: &mut Fields, keys: &[&str], kind: &str| -> Result<(), ConfigError> {
        for key in keys {
            if let Some((_, line)) = f.take(key) {
                return Err(ConfigError::new(Some(line), *key, format!("does not apply to {kind} problems")));
            }
        }
        Ok(())
    };
    let spec = match kind.as_str() {
        "deblur" => {
            reject(f, &["problem.angles"], "deblur")?;
            let (psf_name, psf_line) = f.take("problem.psf").unwrap_or(("gaussian".into(), kind_line));
            let psf = match psf_name.as_str() {
                "gaussian" => {
                    reject(f, &["problem.length", "problem.angle"], "gaussian PSF")?;
                    Psf::Gaussian {
                        sigma: f.parse_or("problem.sigma", 1.0, parse_nonnegative)?,
                    }
                }
                "motion" => {
                    reject(f, &["problem.sigma"], "motion PSF")?;
                    Psf::Motion {
                        length: f.parse_or("problem.length", 15.0, parse_nonnegative)?,
                        angle: f.parse_or("problem.angle", 30.0, parse_finite)?,
                    }
                }
                other => {
                    return Err(ConfigError::new(
                        Some(psf_line),
                        "problem.psf",
                        format!("unknown PSF `{other}` (expected gaussian or motion)"),
                    ))
                }
            };
            ProblemSpec::Deblur { size, psf }
        }
        "tomography" => {
            reject(f, &["problem.psf", "problem.sigma", "problem.length", "problem.angle"], "tomography")?;
            ProblemSpec::Tomography {
                grid: size,
                angles: f.parse_or("problem.angles", size, parse_positive)?,
            }
        }
        other => {
            return Err(ConfigError::new(
                Some(kind_line),
                "problem.type",
                format!("unknown problem type `{other}` (expected deblur or tomography)"),
            ))
        }
    };
    Ok(ProblemConfig {
        spec,
        noise_level,
        seed,
    })
}

fn parse_solvers(f: &mut Fields, problem: &ProblemConfig) -> Result<Vec<SolverEntry>, ConfigError> {
    let mut ids: Vec<(usize, String)> = Vec::new();
    for e in f.entries.values() {
        if let Some(rest) = e.key.strip_prefix("solver.") {
            let Some((id, _)) = rest.split_once('.') else {
                return Err(ConfigError::new(Some(e.line), e.key.clone(), "expected solver.<id>.<field>"));
            };
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(ConfigError::new(
                    Some(e.line),
                    e.key.clone(),
                    "solver ids may contain only letters, digits, '_' and '-'",
                ));
            }
            match ids.iter_mut().find(|(_, i)| i == id) {
                Some(slot) => slot.0 = slot.0.min(e.order),
                None => ids.push((e.order, id.to_string())),
            }
        }
    }
    ids.sort();
    if ids.is_empty() {
        return Err(ConfigError::new(None, "solver", "no solvers configured"));
    }

    let mut out: Vec<SolverEntry> = Vec::new();
    for (_, id) in ids {
        let key = |field: &str| format!("solver.{id}.{field}");
        let (name, name_line) = f.require(&key("name"), parse_string)?;
        let kind: SolverKind = name.parse().map_err(|_| {
            ConfigError::new(
                Some(name_line),
                key("name"),
                format!("unknown solver `{name}` (expected gmres, lsqr, cmrh, lslu, scmrh or slslu)"),
            )
        })?;
        if kind.requires_square() && !problem.spec.is_square() {
            return Err(ConfigError::new(
                Some(name_line),
                key("name"),
                format!("{kind} needs a square operator but the problem is rectangular"),
            ));
        }
        let maxiter = f.parse_or(&key("maxiter"), hessketch::solvers::DEFAULT_MAXITER, parse_positive)?;
        let pivot_kind = f.take(&key("pivot"));
        let sample_size = f.take(&key("sample_size"));
        let pivot = match (pivot_kind, sample_size) {
            (None, None) => PivotChoice::Full,
            (Some((p, line)), s) if p == "full" => {
                if let Some((_, sl)) = s {
                    return Err(ConfigError::new(Some(sl.max(line)), key("sample_size"), "requires pivot = sampled"));
                }
                PivotChoice::Full
            }
            (Some((p, line)), s) if p == "sampled" => match s {
                None => return Err(ConfigError::new(Some(line), key("sample_size"), "required for sampled pivoting")),
                Some((v, sl)) => PivotChoice::Sampled(
                    parse_positive(&v).map_err(|m| ConfigError::new(Some(sl), key("sample_size"), m))?,
                ),
            },
            (Some((p, line)), _) => {
                return Err(ConfigError::new(
                    Some(line),
                    key("pivot"),
                    format!("unknown pivot kind `{p}` (expected full or sampled)"),
                ))
            }
            (None, Some((v, sl))) => PivotChoice::Sampled(
                parse_positive(&v).map_err(|m| ConfigError::new(Some(sl), key("sample_size"), m))?,
            ),
        };
        let pivot_seed = match f.take(&key("pivot_seed")) {
            None => None,
            Some((v, line)) => Some(parse_seed(&v).map_err(|m| ConfigError::new(Some(line), key("pivot_seed"), m))?),
        };
        let sketch_rows = match f.take(&key("sketch_rows")) {
            None => None,
            Some((v, line)) => {
                let rows = parse_positive(&v).map_err(|m| ConfigError::new(Some(line), key("sketch_rows"), m))?;
                if rows < maxiter + 1 {
                    return Err(ConfigError::new(
                        Some(line),
                        key("sketch_rows"),
                        format!("must be at least maxiter + 1 = {}", maxiter + 1),
                    ));
                }
                Some(rows)
            }
        };
        let lambda = match f.take(&key("lambda")) {
            None => 0.0,
            Some((v, line)) => {
                let l = parse_nonnegative(&v).map_err(|m| ConfigError::new(Some(line), key("lambda"), m))?;
                if l > 0.0 && !kind.supports_lambda() {
                    return Err(ConfigError::new(Some(line), key("lambda"), format!("{kind} does not support regularization")));
                }
                l
            }
        };
        let seed = f.parse_or(&key("seed"), 0, parse_seed)?;
        let label = f.parse_or(&key("label"), id.clone(), parse_label)?;
        let assembly = f.parse_or(&key("assembly"), SketchAssembly::default(), |s| match s {
            "column" => Ok(SketchAssembly::ColumnSketch),
            "product" => Ok(SketchAssembly::HessenbergProduct),
            _ => Err(format!("expected column or product, got `{s}`")),
        })?;
        let tikhonov_sketch = f.parse_or(&key("tikhonov_sketch"), TikhonovSketch::default(), |s| match s {
            "basis" => Ok(TikhonovSketch::Basis),
            "pre-elimination" => Ok(TikhonovSketch::PreElimination),
            _ => Err(format!("expected basis or pre-elimination, got `{s}`")),
        })?;
        let keep_factors = f.parse_or(&key("keep_factors"), false, parse_bool)?;
        if out.iter().any(|s| s.label == label) {
            return Err(ConfigError::new(None, key("label"), format!("label `{label}` is used twice")));
        }
        out.push(SolverEntry {
            id,
            label,
            kind,
            maxiter,
            pivot,
            pivot_seed,
            sketch_rows,
            lambda,
            seed,
            assembly,
            tikhonov_sketch,
            keep_factors,
        });
    }
    Ok(out)
}

fn parse_label(s: &str) -> Result<String, String> {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) && !s.starts_with('.') {
        Ok(s.to_string())
    } else {
        Err(format!("labels may contain only letters, digits, '_', '-' and '.', got `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::parse(text, Path::new("/base"))
    }

    const BASIC: &str = "problem.type = tomography\nproblem.size = 16\nsolver.a.name = lsqr\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse(BASIC).unwrap();
        assert_eq!(c.problem.spec, ProblemSpec::Tomography { grid: 16, angles: 16 });
        assert_eq!(c.problem.noise_level, 0.01);
        assert_eq!(c.output_dir, PathBuf::from("/base/hessketch-out"));
        let s = &c.solvers[0];
        assert_eq!((s.label.as_str(), s.kind, s.maxiter, s.pivot), ("a", SolverKind::Lsqr, 30, PivotChoice::Full));
        assert!(!c.diagnostics);
    }

    #[test]
    fn full_config() {
        let text = "\
# deblurring
problem.type = deblur
problem.size = 32
problem.psf = motion
problem.length = 9
problem.angle = 45
problem.noise_level = 0.02
problem.seed = 4
output_dir = /tmp/x
diagnostics = true
solver.s.name = scmrh      # sketched
solver.s.pivot = sampled
solver.s.sample_size = 5
solver.s.sketch_rows = 100
solver.s.lambda = 0.5
solver.s.seed = 9
solver.s.assembly = product
solver.g.name = gmres
solver.g.maxiter = 12
solver.g.label = reference
";
        let c = parse(text).unwrap();
        assert_eq!(
            c.problem.spec,
            ProblemSpec::Deblur {
                size: 32,
                psf: Psf::Motion { length: 9.0, angle: 45.0 }
            }
        );
        assert_eq!(c.output_dir, PathBuf::from("/tmp/x"));
        assert_eq!(c.solvers.len(), 2);
        assert_eq!(c.solvers[0].label, "s");
        assert_eq!(c.solvers[0].pivot, PivotChoice::Sampled(5));
        assert_eq!(c.solvers[0].assembly, SketchAssembly::HessenbergProduct);
        assert_eq!(c.solvers[1].label, "reference");
        let cfg = c.solvers[0].solver_config(true, false);
        assert_eq!(cfg.sketch_rows(), 100);
        assert_eq!(cfg.lambda, 0.5);
        assert!(cfg.compute_diagnostics);
    }

    #[test]
    fn errors_name_line_and_field() {
        let e = parse("problem.type = tomography\nproblem.size = 16\nsolver.a.name = bicgstab\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.field, "solver.a.name");
        assert!(e.to_string().contains("line 3") && e.to_string().contains("solver.a.name"));

        let e = parse(&format!("{BASIC}solver.a.maxiter = many\n")).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (Some(4), "solver.a.maxiter"));

        let e = parse(&format!("{BASIC}problem.colour = red\n")).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (Some(4), "problem.colour"));

        let e = parse(&format!("{BASIC}problem.size = 3\n")).unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("duplicate"));

        let e = parse("problem.type = tomography\nproblem.size = 16\nsolver.a.name = gmres\n").unwrap_err();
        assert!(e.message.contains("square"));

        let e = parse(&format!("{BASIC}solver.a.sketch_rows = 5\n")).unwrap_err();
        assert_eq!(e.field, "solver.a.sketch_rows");

        let e = parse("problem.size = 16\nsolver.a.name = lsqr\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (None, "problem.type"));

        let e = parse("problem.type = deblur\nproblem.size = 16\nproblem.angles = 3\nsolver.a.name = lsqr\n").unwrap_err();
        assert_eq!(e.field, "problem.angles");

        let e = parse("problem.type = tomography\nproblem.size = 16\nsolver.a.name = lsqr\nsolver.b.name = lsqr\nsolver.b.label = a\n")
            .unwrap_err();
        assert!(e.message.contains("used twice"));

        let e = parse("problem.type = deblur\nproblem.size = 16\nsolver.g.name = gmres\nsolver.g.lambda = 1\n").unwrap_err();
        assert_eq!(e.field, "solver.g.lambda");
        assert!(parse("not a pair\n").unwrap_err().message.contains("key = value"));
    }

    #[test]
    fn seed_override_replaces_all_seeds() {
        let mut c = parse(&format!("{BASIC}problem.seed = 3\nsolver.a.seed = 4\nsolver.a.pivot_seed = 5\n")).unwrap();
        c.override_seeds(42);
        assert_eq!(c.problem.seed, 42);
        assert_eq!((c.solvers[0].seed, c.solvers[0].pivot_seed), (42, None));
    }
}
