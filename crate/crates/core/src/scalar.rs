//! Floating-point abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the solvers are generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a count or index.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    /// Positive part `max(x, 0)`.
    #[inline]
    fn pos(self) -> Self {
        self.max(Self::zero())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Power with a fast path for integral exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Power<T> {
    exponent: T,
    integral: Option<i32>,
}

impl<T: Scalar> Power<T> {
    pub(crate) fn new(exponent: T) -> Self {
        let rounded = exponent.round();
        let integral = if (exponent - rounded).abs() == T::zero() && rounded.abs() < T::c(64.0) {
            rounded.to_i32()
        } else {
            None
        };
        Self { exponent, integral }
    }

    #[inline]
    pub(crate) fn of(&self, x: T) -> T {
        match self.integral {
            Some(0) => T::one(),
            Some(1) => x,
            Some(n) => x.powi(n),
            None => x.powf(self.exponent),
        }
    }
}
