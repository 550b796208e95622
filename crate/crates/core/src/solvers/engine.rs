//! Shared iteration for the Hessenberg-based solvers.
//!
//! Each iteration extends the basis by one vector (one product with `A`, plus
//! one with `Aᵀ` in the rectangular case), updates the projected problem
//! incrementally and solves it densely. The iteration itself forms no inner
//! products of operator-sized vectors.

use crate::error::{Error, Result};
use crate::hessenberg::{init_generalized, init_square, GeneralizedHessenbergState, HessenbergState, Start, StepProducts};
use crate::linops::kernels::{block_diagonal_condition_number, spectral_condition_number, truncated_tikhonov_ls};
use crate::linops::vector::{combine, diagnostic_norm, sub};
use crate::linops::{CountedOperator, DenseMatrix, OpCounters};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::sketch::{make_gaussian_sketch, measured_epsilon, SketchOperator};
use crate::solvers::{
    projected_minres_from_images, trivial_result, Clock, Factors, IterationRecord, SketchAssembly, SolveResult,
    SolverConfig, SolverTrace, System, Termination, TikhonovSketch,
};

/// Stream labels for the per-solve sketches.
const DATA_SKETCH_STREAM: u64 = 2;
const SOLUTION_SKETCH_STREAM: u64 = 1;

enum Basis<T> {
    Square(HessenbergState<T>),
    General(GeneralizedHessenbergState<T>),
}

impl<T: Scalar> Basis<T> {
    fn step(&mut self, a: &CountedOperator<'_, T>) -> Result<StepProducts<T>> {
        match self {
            Basis::Square(s) => s.step(a),
            Basis::General(s) => s.step(a),
        }
    }

    fn steps(&self) -> usize {
        match self {
            Basis::Square(s) => s.steps(),
            Basis::General(s) => s.steps(),
        }
    }

    fn beta(&self) -> T {
        match self {
            Basis::Square(s) => s.beta(),
            Basis::General(s) => s.beta(),
        }
    }

    fn is_breakdown(&self) -> bool {
        match self {
            Basis::Square(s) => s.is_breakdown(),
            Basis::General(s) => s.is_breakdown(),
        }
    }

    fn r0(&self) -> &[T] {
        match self {
            Basis::Square(s) => s.initial_residual(),
            Basis::General(s) => s.initial_residual(),
        }
    }

    /// Solution-space columns `l_1, …`.
    fn solution_basis(&self) -> &[Vec<T>] {
        match self {
            Basis::Square(s) => s.basis(),
            Basis::General(s) => s.solution_basis(),
        }
    }

    /// Columns of `M_{k+1}`, the basis whose pseudoinverse defines the quasi-norm.
    fn quasi_basis(&self) -> DenseMatrix<T> {
        match self {
            Basis::Square(s) => s.basis_matrix(usize::MAX),
            Basis::General(s) => s.data_basis_matrix(usize::MAX),
        }
    }

    fn hessenberg(&self) -> DenseMatrix<T> {
        match self {
            Basis::Square(s) => s.hessenberg(),
            Basis::General(s) => s.hessenberg(),
        }
    }

    fn factors(&self) -> Factors<T> {
        match self {
            Basis::Square(s) => Factors {
                matrices: vec![
                    ("L".into(), s.basis_matrix(usize::MAX)),
                    ("H".into(), s.hessenberg()),
                ],
                pivots: vec![("t".into(), s.permutation().to_vec())],
            },
            Basis::General(s) => Factors {
                matrices: vec![
                    ("D".into(), s.data_basis_matrix(usize::MAX)),
                    ("L".into(), s.solution_basis_matrix(usize::MAX)),
                    ("H".into(), s.hessenberg()),
                    ("W".into(), s.triangular()),
                ],
                pivots: vec![
                    ("t".into(), s.data_permutation().to_vec()),
                    ("g".into(), s.solution_permutation().to_vec()),
                ],
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Objective {
    /// `‖βe₁ − H y‖² + λ²‖y‖²`.
    Quasi,
    /// `‖S₂(A L_k y − r0)‖² + λ²‖S₁ L_k y‖²`.
    Sketched,
}

/// Sketches handed to a sketched solve.
pub struct Sketches<T> {
    /// `S` (or `S₂`), `ℓ × m`.
    pub data: SketchOperator<T>,
    /// `S₁`, `ℓ × n`; required when `λ > 0`.
    pub solution: Option<SketchOperator<T>>,
}

impl<T: Scalar> Sketches<T> {
    /// Gaussian sketches derived from `cfg.seed`. `S₁` is drawn only when
    /// `λ > 0`, so `S₂` is the same matrix with and without regularization.
    pub fn gaussian(cfg: &SolverConfig<T>, m: usize, n: usize) -> Result<Self> {
        let rows = cfg.sketch_rows();
        let data = make_gaussian_sketch(rows, m, derive_seed(cfg.seed, DATA_SKETCH_STREAM))?;
        let solution = if cfg.lambda > T::zero() {
            Some(make_gaussian_sketch(rows, n, derive_seed(cfg.seed, SOLUTION_SKETCH_STREAM))?)
        } else {
            None
        };
        Ok(Self { data, solution })
    }
}

/// Incrementally assembled sketched projected problem.
struct SketchedProblem<T> {
    sketches: Sketches<T>,
    sr0: Vec<T>,
    z: DenseMatrix<T>,
    /// `S·l_j`, only for [`SketchAssembly::HessenbergProduct`].
    sl: DenseMatrix<T>,
    /// Columns available for `F`; `F_k` uses the first `k`.
    f: DenseMatrix<T>,
}

fn empty<T: Scalar>(rows: usize) -> DenseMatrix<T> {
    DenseMatrix::from_col_major(rows, 0, Vec::new()).expect("empty matrix")
}

fn run<T: Scalar>(
    sys: &System<'_, T>,
    cfg: &SolverConfig<T>,
    square: bool,
    objective: Objective,
    sketches: Option<Sketches<T>>,
) -> Result<SolveResult<T>> {
    sys.validate()?;
    let (m, n) = (sys.op.rows(), sys.op.cols());
    cfg.validate(n)?;
    if square && m != n {
        return Err(Error::InvalidArgument(format!(
            "solver needs a square operator, got {m}x{n}"
        )));
    }
    let lambda = cfg.lambda;
    let regularized = lambda > T::zero();
    if objective == Objective::Sketched {
        if let Some(s) = &sketches {
            if s.data.in_rows() != m {
                return Err(Error::DimensionMismatch {
                    context: "data sketch columns",
                    expected: m,
                    found: s.data.in_rows(),
                });
            }
            if s.data.out_rows() < cfg.maxiter.min(n) + 1 && s.data.out_rows() < m {
                return Err(Error::InvalidArgument(format!(
                    "sketch has {} rows but {} iterations need at least {}",
                    s.data.out_rows(),
                    cfg.maxiter,
                    cfg.maxiter + 1
                )));
            }
        } else if cfg.sketch_rows() < cfg.maxiter + 1 {
            return Err(Error::InvalidArgument(format!(
                "sketch_rows {} must be at least maxiter + 1 = {}",
                cfg.sketch_rows(),
                cfg.maxiter + 1
            )));
        }
    }
    let pre_elimination = cfg.tikhonov_sketch == TikhonovSketch::PreElimination && !square;

    let clock = Clock::new(cfg.record_timing);
    let counters = OpCounters::new();
    let a = CountedOperator::new(sys.op, &counters);
    let x0 = cfg.start_vector(n);

    let start = if square {
        match init_square(&a, sys.rhs, &x0, cfg.pivot)? {
            Start::Ready(s) => Basis::Square(s),
            _ => return Ok(trivial_result(x0)),
        }
    } else {
        match init_generalized(&a, sys.rhs, &x0, cfg.pivot)? {
            Start::Ready(s) => Basis::General(s),
            _ => return Ok(trivial_result(x0)),
        }
    };
    let mut basis = start;

    let mut sketched = match objective {
        Objective::Quasi => None,
        Objective::Sketched => {
            let sk = match sketches {
                Some(s) => s,
                None => Sketches::gaussian(cfg, m, n)?,
            };
            if regularized {
                match &sk.solution {
                    None => {
                        return Err(Error::InvalidArgument(
                            "regularized sketched solve needs a solution-space sketch".into(),
                        ))
                    }
                    Some(s1) if s1.in_rows() != n || s1.out_rows() != sk.data.out_rows() => {
                        return Err(Error::DimensionMismatch {
                            context: "solution sketch shape",
                            expected: n,
                            found: s1.in_rows(),
                        })
                    }
                    _ => {}
                }
            }
            let rows = sk.data.out_rows();
            let sr0 = sk.data.apply_counted(basis.r0(), &counters)?;
            let mut sl = empty(rows);
            if cfg.sketch_assembly == SketchAssembly::HessenbergProduct && square {
                sl.push_column(&sk.data.apply_counted(&basis.solution_basis()[0], &counters)?)?;
            }
            let mut f = empty(rows);
            if let (true, true, Some(s1), Basis::General(g)) = (regularized, pre_elimination, &sk.solution, &basis) {
                // Aᵀ·d₁ = W₁₁·l₁
                let w11 = g.triangular()[(0, 0)];
                let col: Vec<T> = g.solution_basis()[0].iter().map(|&v| v * w11).collect();
                f.push_column(&s1.apply_counted(&col, &counters)?)?;
            }
            Some(SketchedProblem {
                sketches: sk,
                sr0,
                z: empty(rows),
                sl,
                f,
            })
        }
    };

    let mut images: Vec<Vec<T>> = Vec::new();
    let mut trace = SolverTrace::default();
    let mut x = x0.clone();
    let mut termination = Termination::MaxIter;

    for _ in 0..cfg.maxiter {
        let products = basis.step(&a)?;
        let k = basis.steps();
        if cfg.compute_diagnostics {
            images.push(products.forward.clone());
        }

        let (y, rank, sres, proj) = match (&mut sketched, objective) {
            (Some(sp), Objective::Sketched) => {
                let z = if square && cfg.sketch_assembly == SketchAssembly::HessenbergProduct {
                    let lb = basis.solution_basis();
                    if lb.len() > sp.sl.cols() {
                        let col = sp.sketches.data.apply_counted(&lb[lb.len() - 1], &counters)?;
                        sp.sl.push_column(&col)?;
                    }
                    let h = basis.hessenberg();
                    let sl = sp.sl.leading_columns(h.rows());
                    sl.matmul(&h.leading_rows(sl.cols()))?
                } else {
                    let col = sp.sketches.data.apply_counted(&products.forward, &counters)?;
                    sp.z.push_column(&col)?;
                    sp.z.clone()
                };
                if let (true, Some(s1)) = (regularized, &sp.sketches.solution) {
                    if pre_elimination {
                        if let Some(q) = &products.transpose {
                            sp.f.push_column(&s1.apply_counted(q, &counters)?)?;
                        }
                    } else {
                        let col = s1.apply_counted(&basis.solution_basis()[k - 1], &counters)?;
                        sp.f.push_column(&col)?;
                    }
                }
                let f = if regularized {
                    sp.f.leading_columns(k)
                } else {
                    DenseMatrix::zeros(0, k)
                };
                let (y, rank) = truncated_tikhonov_ls(&z, &f, &sp.sr0, lambda)?;
                let sres = diagnostic_norm(&sub(&z.mul_vec(&y), &sp.sr0));
                let pen = if regularized {
                    diagnostic_norm(&f.mul_vec(&y))
                } else {
                    T::zero()
                };
                let proj = (sres * sres + lambda * lambda * pen * pen).sqrt();
                (y, rank, Some(sres), proj)
            }
            _ => {
                let h = basis.hessenberg();
                let mut rhs = vec![T::zero(); k + 1];
                rhs[0] = basis.beta();
                let (y, rank) = truncated_tikhonov_ls(&h, &DenseMatrix::identity(k), &rhs, lambda)?;
                let res = diagnostic_norm(&sub(&h.mul_vec(&y), &rhs));
                let ynorm = diagnostic_norm(&y);
                let proj = (res * res + lambda * lambda * ynorm * ynorm).sqrt();
                (y, rank, None, proj)
            }
        };

        let update = combine(n, &basis.solution_basis()[..k], &y);
        x = x0.iter().zip(&update).map(|(&a, &b)| a + b).collect();

        let mut rec = IterationRecord::new(k, counters.snapshot());
        rec.sres_norm = sres;
        rec.proj_obj = Some(proj);
        rec.rel_err = sys.relative_error(&x);
        if rank < k {
            rec.truncated_rank = Some(rank);
        }
        if cfg.compute_diagnostics {
            rec.res_norm = Some(sys.residual_norm(&x)?);
            let al = DenseMatrix::from_columns(m, &images)?;
            rec.oracle_res_norm = projected_minres_from_images(&al, basis.r0()).ok().map(|(_, r)| r);
            let mq = basis.quasi_basis();
            rec.kappa_basis = spectral_condition_number(&mq).ok();
            if regularized {
                let lk = DenseMatrix::from_columns(n, &basis.solution_basis()[..k])?;
                rec.kappa_dbar = block_diagonal_condition_number(&[&mq, &lk]).ok();
            }
            if let Some(sp) = &sketched {
                let mut with_r0 = al;
                with_r0.push_column(basis.r0())?;
                rec.eps_embed = measured_epsilon(&sp.sketches.data, &with_r0).ok();
            }
        }
        rec.wall_ms = clock.elapsed_ms();
        trace.records.push(rec);

        if basis.is_breakdown() {
            termination = Termination::Breakdown;
            break;
        }
    }

    let factors = cfg.keep_factors.then(|| {
        let mut f = basis.factors();
        if let Some(sp) = &sketched {
            if sp.z.cols() > 0 {
                f.matrices.push(("Z".into(), sp.z.clone()));
            }
            if sp.f.cols() > 0 {
                f.matrices.push(("F".into(), sp.f.clone()));
            }
        }
        f
    });

    Ok(SolveResult {
        x,
        trace,
        termination,
        factors,
    })
}

/// CMRH: quasi-minimal residual over the square Hessenberg basis; with
/// `λ > 0` the projected Tikhonov problem `‖βe₁ − H y‖² + λ²‖y‖²`.
pub fn cmrh<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    run(sys, cfg, true, Objective::Quasi, None)
}

/// LSLU: quasi-minimal residual over the generalized Hessenberg bases; with
/// `λ > 0` the projected Tikhonov problem `‖βe₁ − H y‖² + λ²‖y‖²`.
pub fn lslu<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    run(sys, cfg, false, Objective::Quasi, None)
}

/// Sketched CMRH: minimizes `‖S(A L_k y − r0)‖` with one Gaussian sketch
/// drawn per solve.
pub fn scmrh<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    run(sys, cfg, true, Objective::Sketched, None)
}

/// Sketched LSLU: minimizes `‖S₂(A L_k y − r0)‖` with one Gaussian sketch
/// drawn per solve.
pub fn slslu<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    run(sys, cfg, false, Objective::Sketched, None)
}

/// Sketched CMRH for `‖S₂(A L_k y − r0)‖² + λ²‖S₁ L_k y‖²`; identical to
/// [`scmrh`] when `λ = 0`.
pub fn scmrh_tikhonov<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    run(sys, cfg, true, Objective::Sketched, None)
}

/// Sketched LSLU for `‖S₂(A L_k y − r0)‖² + λ²‖S₁ L_k y‖²`; identical to
/// [`slslu`] when `λ = 0`.
pub fn slslu_tikhonov<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    run(sys, cfg, false, Objective::Sketched, None)
}

/// [`scmrh`] / [`scmrh_tikhonov`] with caller-supplied sketches.
pub fn scmrh_with_sketches<T: Scalar>(
    sys: &System<'_, T>,
    cfg: &SolverConfig<T>,
    sketches: Sketches<T>,
) -> Result<SolveResult<T>> {
    run(sys, cfg, true, Objective::Sketched, Some(sketches))
}

/// [`slslu`] / [`slslu_tikhonov`] with caller-supplied sketches.
pub fn slslu_with_sketches<T: Scalar>(
    sys: &System<'_, T>,
    cfg: &SolverConfig<T>,
    sketches: Sketches<T>,
) -> Result<SolveResult<T>> {
    run(sys, cfg, false, Objective::Sketched, Some(sketches))
}
