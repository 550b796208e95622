//! Floating-point scalar abstraction shared by every kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point type the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` constant, saturating to infinity or zero when out of range.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    /// Relative threshold used for numerical rank decisions.
    ///
    /// Equals `1e-14` in double precision and scales with machine epsilon
    /// otherwise, so single precision keeps a meaningful cutoff.
    #[inline]
    fn rank_tol() -> Self {
        Self::lit(1e-14 / f64::EPSILON) * Self::epsilon()
    }

    /// Smallest singular value still treated as nonzero by condition estimates.
    #[inline]
    fn tiny() -> Self {
        Self::lit(1e-300).max(Self::min_positive_value())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
