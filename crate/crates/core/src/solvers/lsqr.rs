use crate::error::Result;
use crate::linops::vector::{axpy, scale};
use crate::linops::{CountedOperator, OpCounters};
use crate::scalar::Scalar;
use crate::solvers::{
    trivial_result, Clock, IterationRecord, SolveResult, SolverConfig, SolverTrace, System, Termination,
};

/// LSQR (Golub–Kahan bidiagonalization) with optional damping `λ`, minimizing
/// `‖A·x − b‖² + λ²‖x‖²` over the Krylov space; `x0` shifts the search space
/// and the damping then acts on `x − x0`.
pub fn lsqr<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    sys.validate()?;
    let n = sys.op.cols();
    cfg.validate(n)?;
    let clock = Clock::new(cfg.record_timing);
    let counters = OpCounters::new();
    let a = CountedOperator::new(sys.op, &counters);
    let damp = cfg.lambda;
    let x0 = cfg.start_vector(n);

    let ax0 = a.apply(&x0)?;
    let mut u: Vec<T> = sys.rhs.iter().zip(&ax0).map(|(&b, &v)| b - v).collect();
    let mut beta = counters.norm(&u);
    if beta == T::zero() {
        return Ok(trivial_result(x0));
    }
    scale(T::one() / beta, &mut u);
    let mut v = a.apply_transpose(&u)?;
    let mut alpha = counters.norm(&v);
    if alpha == T::zero() {
        return Ok(trivial_result(x0));
    }
    scale(T::one() / alpha, &mut v);

    let mut w = v.clone();
    let mut x = x0;
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut trace = SolverTrace::default();
    let mut termination = Termination::MaxIter;
    // running Frobenius estimate of the bidiagonal, scale for breakdown tests
    let mut anorm = alpha;

    for k in 1..=cfg.maxiter {
        let mut au = a.apply(&v)?;
        axpy(-alpha, &u, &mut au);
        u = au;
        beta = counters.norm(&u);
        if beta > T::zero() {
            scale(T::one() / beta, &mut u);
        }
        let mut atv = a.apply_transpose(&u)?;
        axpy(-beta, &v, &mut atv);
        v = atv;
        alpha = counters.norm(&v);
        if alpha > T::zero() {
            scale(T::one() / alpha, &mut v);
        }

        anorm = anorm.hypot(alpha).hypot(beta).hypot(damp);
        let (rhobar1, phibar_d) = if damp > T::zero() {
            let rhobar1 = rhobar.hypot(damp);
            let cs1 = rhobar / rhobar1;
            (rhobar1, cs1 * phibar)
        } else {
            (rhobar, phibar)
        };
        let rho = rhobar1.hypot(beta);
        let cs = rhobar1 / rho;
        let sn = beta / rho;
        let theta = sn * alpha;
        rhobar = -cs * alpha;
        let phi = cs * phibar_d;
        phibar = sn * phibar_d;

        axpy(phi / rho, &w, &mut x);
        let t2 = -theta / rho;
        for (wi, &vi) in w.iter_mut().zip(&v) {
            *wi = vi + t2 * *wi;
        }

        let mut rec = IterationRecord::new(k, counters.snapshot());
        rec.proj_obj = Some(phibar.abs());
        rec.rel_err = sys.relative_error(&x);
        if cfg.compute_diagnostics {
            let res = sys.residual_norm(&x)?;
            rec.res_norm = Some(res);
            if damp == T::zero() {
                rec.oracle_res_norm = Some(res);
            }
        }
        rec.wall_ms = clock.elapsed_ms();
        trace.records.push(rec);

        let tol = T::rank_tol() * anorm;
        if beta <= tol || alpha <= tol || k >= n.min(sys.op.rows()) {
            termination = Termination::Breakdown;
            break;
        }
    }

    Ok(SolveResult {
        x,
        trace,
        termination,
        factors: None,
    })
}
