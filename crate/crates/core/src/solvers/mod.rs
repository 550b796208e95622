//! Iterative solvers sharing one configuration, trace and result format.
//!
//! | solver | basis | projected problem |
//! |--------|-------|-------------------|
//! | GMRES  | Arnoldi | exact minimal residual |
//! | LSQR   | Golub–Kahan | exact minimal residual (damped for `λ > 0`) |
//! | CMRH   | square Hessenberg | `‖βe₁ − H y‖` (+ `λ²‖y‖²`) |
//! | LSLU   | generalized Hessenberg | `‖βe₁ − H y‖` (+ `λ²‖y‖²`) |
//! | sCMRH  | square Hessenberg | `‖S(A L_k y − r0)‖` (+ `λ²‖S₁ L_k y‖²`) |
//! | sLSLU  | generalized Hessenberg | `‖S₂(A L_k y − r0)‖` (+ `λ²‖S₁ L_k y‖²`) |

mod engine;
mod gmres;
mod lsqr;
mod oracle;
mod trace;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

pub use engine::{
    cmrh, lslu, scmrh, scmrh_tikhonov, scmrh_with_sketches, slslu, slslu_tikhonov, slslu_with_sketches, Sketches,
};
pub use gmres::gmres;
pub use lsqr::lsqr;
pub use oracle::{projected_minres_oracle, projected_minres_from_images};
pub use trace::{IterationRecord, SolverTrace, TRACE_COLUMNS};

use crate::error::{check_len, Error, Result};
use crate::hessenberg::PivotStrategy;
use crate::linops::vector::{diagnostic_norm, sub};
use crate::linops::{DenseMatrix, LinearOperator};
use crate::mmio;
use crate::scalar::Scalar;

/// Default iteration budget.
pub const DEFAULT_MAXITER: usize = 30;

/// Default sketch size `ℓ = 10·(maxiter + 1)`.
pub fn default_sketch_rows(maxiter: usize) -> usize {
    10 * (maxiter + 1)
}

/// How the sketched square solver assembles `Z_k = S·A·L_k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SketchAssembly {
    /// Append `S·(A·l_k)` each iteration.
    #[default]
    ColumnSketch,
    /// Form `(S·L_{k+1})·H_{k+1,k}` from sketched basis columns.
    HessenbergProduct,
}

/// Which vectors populate `F_k` in the sketched regularization term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TikhonovSketch {
    /// `F_k = S₁·L_k`, so the penalty is exactly `λ²‖S₁ L_k y‖²`.
    #[default]
    Basis,
    /// `f_{k+1} = S₁·(Aᵀ d_{k+1})` taken before elimination against
    /// `l_1 … l_k`. Kept for comparison with published runs; rectangular
    /// solver only.
    PreElimination,
}

/// Options shared by every solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub maxiter: usize,
    pub pivot: PivotStrategy,
    /// Sketch size `ℓ`; `None` means `10·(maxiter + 1)`.
    pub sketch_rows: Option<usize>,
    /// Tikhonov parameter `λ` (penalty `λ²‖·‖²`); zero disables regularization.
    pub lambda: T,
    /// Seed of the sketching matrices.
    pub seed: u64,
    /// Starting guess; zero when absent.
    pub x0: Option<Vec<T>>,
    /// Exact residuals, oracle residuals, condition numbers and measured `ε`.
    pub compute_diagnostics: bool,
    pub sketch_assembly: SketchAssembly,
    pub tikhonov_sketch: TikhonovSketch,
    /// Fill `wall_ms`; off by default so traces replay byte for byte.
    pub record_timing: bool,
    /// Return the bases and projected matrices in [`SolveResult::factors`].
    pub keep_factors: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            maxiter: DEFAULT_MAXITER,
            pivot: PivotStrategy::full(),
            sketch_rows: None,
            lambda: T::zero(),
            seed: 0,
            x0: None,
            compute_diagnostics: false,
            sketch_assembly: SketchAssembly::default(),
            tikhonov_sketch: TikhonovSketch::default(),
            record_timing: false,
            keep_factors: false,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn with_maxiter(mut self, maxiter: usize) -> Self {
        self.maxiter = maxiter;
        self
    }

    pub fn with_pivot(mut self, pivot: PivotStrategy) -> Self {
        self.pivot = pivot;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sketch_rows(mut self, rows: usize) -> Self {
        self.sketch_rows = Some(rows);
        self
    }

    pub fn with_diagnostics(mut self, on: bool) -> Self {
        self.compute_diagnostics = on;
        self
    }

    pub fn with_x0(mut self, x0: Vec<T>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn sketch_rows(&self) -> usize {
        self.sketch_rows.unwrap_or_else(|| default_sketch_rows(self.maxiter))
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.maxiter == 0 {
            return Err(Error::InvalidArgument("maxiter must be positive".into()));
        }
        if !self.lambda.is_finite() || self.lambda < T::zero() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        self.pivot.validate()?;
        if let Some(x0) = &self.x0 {
            check_len("x0", n, x0.len())?;
        }
        Ok(())
    }

    pub(crate) fn start_vector(&self, n: usize) -> Vec<T> {
        self.x0.clone().unwrap_or_else(|| vec![T::zero(); n])
    }
}

/// The linear system handed to a solver.
#[derive(Clone, Copy)]
pub struct System<'a, T: Scalar> {
    pub op: &'a dyn LinearOperator<T>,
    pub rhs: &'a [T],
    /// Ground truth used only for relative-error reporting.
    pub x_true: Option<&'a [T]>,
}

impl<'a, T: Scalar> System<'a, T> {
    pub fn new(op: &'a dyn LinearOperator<T>, rhs: &'a [T]) -> Self {
        Self { op, rhs, x_true: None }
    }

    pub fn with_truth(mut self, x_true: &'a [T]) -> Self {
        self.x_true = Some(x_true);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_len("right-hand side", self.op.rows(), self.rhs.len())?;
        if let Some(x) = self.x_true {
            check_len("reference solution", self.op.cols(), x.len())?;
        }
        Ok(())
    }

    pub(crate) fn relative_error(&self, x: &[T]) -> Option<T> {
        self.x_true.map(|xt| diagnostic_norm(&sub(x, xt)) / diagnostic_norm(xt))
    }

    /// `‖b − A·x‖` with an uncounted product.
    pub(crate) fn residual_norm(&self, x: &[T]) -> Result<T> {
        let ax = self.op.apply(x)?;
        Ok(diagnostic_norm(&sub(self.rhs, &ax)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MaxIter,
    Breakdown,
    /// The starting guess already solved the (normal) equations.
    Trivial,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::MaxIter => "maxiter",
            Termination::Breakdown => "breakdown",
            Termination::Trivial => "trivial",
        })
    }
}

/// Bases, projected matrices and pivot lists retained for inspection.
#[derive(Clone, Debug, Default)]
pub struct Factors<T> {
    pub matrices: Vec<(String, DenseMatrix<T>)>,
    pub pivots: Vec<(String, Vec<usize>)>,
}

impl<T: Scalar> Factors<T> {
    pub fn matrix(&self, name: &str) -> Option<&DenseMatrix<T>> {
        self.matrices.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Writes `<prefix>.<name>.mm` for every matrix and 1-based pivot list.
    pub fn write_matrix_market(&self, dir: &Path, prefix: &str) -> Result<()> {
        for (name, m) in &self.matrices {
            mmio::save_dense(dir.join(format!("{prefix}.{name}.mm")), m)?;
        }
        for (name, p) in &self.pivots {
            let v: Vec<T> = p.iter().map(|&i| T::lit((i + 1) as f64)).collect();
            mmio::save_vector(dir.join(format!("{prefix}.{name}.mm")), &v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    /// Final iterate; equals the iterate of the last trace record.
    pub x: Vec<T>,
    pub trace: SolverTrace<T>,
    pub termination: Termination,
    pub factors: Option<Factors<T>>,
}

/// Solver selector used by the experiment harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Gmres,
    Lsqr,
    Cmrh,
    Lslu,
    Scmrh,
    Slslu,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Gmres,
        SolverKind::Lsqr,
        SolverKind::Cmrh,
        SolverKind::Lslu,
        SolverKind::Scmrh,
        SolverKind::Slslu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Gmres => "gmres",
            SolverKind::Lsqr => "lsqr",
            SolverKind::Cmrh => "cmrh",
            SolverKind::Lslu => "lslu",
            SolverKind::Scmrh => "scmrh",
            SolverKind::Slslu => "slslu",
        }
    }

    pub fn requires_square(self) -> bool {
        matches!(self, SolverKind::Gmres | SolverKind::Cmrh | SolverKind::Scmrh)
    }

    pub fn is_sketched(self) -> bool {
        matches!(self, SolverKind::Scmrh | SolverKind::Slslu)
    }

    /// Uses a (generalized) Hessenberg basis and therefore pivoting.
    pub fn uses_pivoting(self) -> bool {
        !matches!(self, SolverKind::Gmres | SolverKind::Lsqr)
    }

    pub fn supports_lambda(self) -> bool {
        self != SolverKind::Gmres
    }

    pub fn solve<T: Scalar>(self, sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
        match self {
            SolverKind::Gmres => gmres(sys, cfg),
            SolverKind::Lsqr => lsqr(sys, cfg),
            SolverKind::Cmrh => cmrh(sys, cfg),
            SolverKind::Lslu => lslu(sys, cfg),
            SolverKind::Scmrh => scmrh(sys, cfg),
            SolverKind::Slslu => slslu(sys, cfg),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver `{s}`")))
    }
}

/// Wall clock for optional timing columns.
pub(crate) struct Clock {
    start: Option<Instant>,
}

impl Clock {
    pub(crate) fn new(enabled: bool) -> Self {
        Self {
            start: enabled.then(Instant::now),
        }
    }

    pub(crate) fn elapsed_ms(&self) -> Option<f64> {
        self.start.map(|s| s.elapsed().as_secs_f64() * 1e3)
    }
}

pub(crate) fn trivial_result<T: Scalar>(x0: Vec<T>) -> SolveResult<T> {
    SolveResult {
        x: x0,
        trace: SolverTrace::default(),
        termination: Termination::Trivial,
        factors: None,
    }
}
