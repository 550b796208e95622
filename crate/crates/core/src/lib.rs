//! Inner-product-free Krylov solvers (CMRH, LSLU), their randomized sketched
//! counterparts (sCMRH, sLSLU) with optional Tikhonov regularization, and the
//! GMRES/LSQR references, all operating on matrix-free linear operators.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the double-precision types used by the
//! experiment harness.

pub mod error;
pub mod hessenberg;
pub mod linops;
pub mod mmio;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod sketch;
pub mod solvers;

pub use error::{Error, Result};
pub use linops::{
    dense_qr_ls, spectral_condition_number, stacked_tikhonov_ls, CounterSnapshot, CountedOperator,
    CsrMatrix, DenseMatrix, IdentityOperator, LinearOperator, OpCounters,
};
pub use scalar::Scalar;
pub use sketch::{make_gaussian_sketch, measured_epsilon, sketch_and_solve_ls, SketchOperator};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type SparseMatrix = CsrMatrix<f64>;
pub type Sketch = SketchOperator<f64>;
pub type Sketch32 = SketchOperator<f32>;
pub type Operator = dyn LinearOperator<f64>;
pub type Problem = problems::Problem<f64>;
pub type Config = solvers::SolverConfig<f64>;
pub type Trace = solvers::SolverTrace<f64>;
pub type Solution = solvers::SolveResult<f64>;
