//! Scalar abstraction shared by the kernel, estimator and oracle code.
//!
//! Everything numeric in those modules is written against [`Scalar`] so the
//! same routines run in `f64` (the default used by the CLI and simulations)
//! or `f32` for memory-bound experiments. Note that the U-centred variance
//! estimator subtracts nearly equal quantities; its exactness checks only hold
//! to tight tolerances in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real floating point type usable by the estimators.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent finite `f64`s.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    /// Converts a count.
    #[inline]
    fn count(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits in a float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
