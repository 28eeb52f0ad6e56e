//! The scalar abstraction every numerical routine in this crate is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar usable by the geometry, jet, multi-dual and quadrature code.
///
/// Implemented for `f32` and `f64`. Tolerances throughout the crate are
/// expressed as `f64` and converted with [`Scalar::lit`].
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion to `f64`, used for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Binomial coefficient for the small orders used by jets and tensors.
pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Largest absolute value in a slice (0 for an empty slice).
pub(crate) fn max_abs<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}
