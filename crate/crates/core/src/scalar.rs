//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used throughout the crate (`f32` and `f64` implement it).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Lossless-or-rounding conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite real converts to f64")
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
}

/// Shorthand for `T::lit`.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// `ln(Σ exp(xs))` with max-subtraction.
pub fn log_sum_exp<T: Real>(xs: impl IntoIterator<Item = T> + Clone) -> T {
    let m = xs
        .clone()
        .into_iter()
        .fold(T::neg_infinity(), |acc, x| if x > acc { x } else { acc });
    if m == T::neg_infinity() {
        return m;
    }
    let s: T = xs.into_iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}
