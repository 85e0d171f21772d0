//! Floating point abstraction shared by the generator, solvers and
//! distributions.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the analytic pipeline is generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance on `|sum - 1|` accepted for a probability vector.
    fn norm_tol() -> Self;

    /// Relative bound on the infinity-norm residual of a linear solve.
    fn residual_tol() -> Self;

    /// Lossy conversion from a count or an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_count(k: usize) -> Self {
        Self::from_usize(k).expect("count representable")
    }
}

impl Scalar for f64 {
    fn norm_tol() -> Self {
        1e-9
    }

    fn residual_tol() -> Self {
        1e-8
    }
}

impl Scalar for f32 {
    fn norm_tol() -> Self {
        1e-4
    }

    fn residual_tol() -> Self {
        1e-3
    }
}
