use crate::error::{Error, Result};
use crate::linops::vector::{axpy, combine, sub};
use crate::linops::{CountedOperator, OpCounters};
use crate::scalar::Scalar;
use crate::solvers::{
    trivial_result, Clock, IterationRecord, SolveResult, SolverConfig, SolverTrace, System, Termination,
};

/// Givens rotation `(c, s)` zeroing `b` in `[a; b]`.
fn givens<T: Scalar>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        return (T::one(), T::zero());
    }
    let r = a.hypot(b);
    (a / r, b / r)
}

/// Full (unrestarted) GMRES with modified Gram–Schmidt Arnoldi.
pub fn gmres<T: Scalar>(sys: &System<'_, T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    sys.validate()?;
    let n = sys.op.cols();
    if sys.op.rows() != n {
        return Err(Error::InvalidArgument("GMRES needs a square operator".into()));
    }
    cfg.validate(n)?;
    if cfg.lambda != T::zero() {
        return Err(Error::InvalidArgument("GMRES does not support Tikhonov regularization".into()));
    }
    let clock = Clock::new(cfg.record_timing);
    let counters = OpCounters::new();
    let a = CountedOperator::new(sys.op, &counters);
    let x0 = cfg.start_vector(n);
    let r0 = sub(sys.rhs, &a.apply(&x0)?);
    let beta = counters.norm(&r0);
    if beta == T::zero() {
        return Ok(trivial_result(x0));
    }

    let mut basis = vec![r0.iter().map(|&v| v / beta).collect::<Vec<T>>()];
    // triangularized Hessenberg columns and rotations
    let mut r_cols: Vec<Vec<T>> = Vec::new();
    let mut rotations: Vec<(T, T)> = Vec::new();
    let mut g = vec![beta];
    let mut trace = SolverTrace::default();
    let mut x = x0.clone();
    let mut termination = Termination::MaxIter;

    for k in 1..=cfg.maxiter {
        let mut w = a.apply(&basis[k - 1])?;
        let w_norm0 = counters.norm(&w);
        let mut h = Vec::with_capacity(k + 1);
        for v in &basis {
            let hj = counters.dot(&w, v);
            axpy(-hj, v, &mut w);
            h.push(hj);
        }
        let h_next = counters.norm(&w);
        h.push(h_next);
        for (j, &(c, s)) in rotations.iter().enumerate() {
            let (a0, a1) = (h[j], h[j + 1]);
            h[j] = c * a0 + s * a1;
            h[j + 1] = -s * a0 + c * a1;
        }
        let (c, s) = givens(h[k - 1], h[k]);
        h[k - 1] = c * h[k - 1] + s * h[k];
        h[k] = T::zero();
        rotations.push((c, s));
        let gk = g[k - 1];
        g[k - 1] = c * gk;
        g.push(-s * gk);
        h.truncate(k);
        r_cols.push(h);

        // back substitution on the k × k triangle
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k {
                acc -= r_cols[j][i] * y[j];
            }
            y[i] = acc / r_cols[i][i];
        }
        let update = combine(n, &basis, &y);
        x = x0.iter().zip(&update).map(|(&a, &b)| a + b).collect();

        let mut rec = IterationRecord::new(k, counters.snapshot());
        rec.proj_obj = Some(g[k].abs());
        rec.rel_err = sys.relative_error(&x);
        if cfg.compute_diagnostics {
            let res = sys.residual_norm(&x)?;
            rec.res_norm = Some(res);
            rec.oracle_res_norm = Some(res);
        }
        rec.wall_ms = clock.elapsed_ms();
        trace.records.push(rec);

        if k == n || h_next <= T::rank_tol() * w_norm0 {
            termination = Termination::Breakdown;
            break;
        }
        basis.push(w.iter().map(|&v| v / h_next).collect());
    }

    Ok(SolveResult {
        x,
        trace,
        termination,
        factors: None,
    })
}
