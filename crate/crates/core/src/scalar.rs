//! Scalar abstractions shared by the reward and optimisation numerics.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// floating point: f32 or f64
pub trait Real: Float + FromPrimitive + Sum + Debug + Send + Sync + 'static {
    /// Converts an `f64` constant into `Self`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar used for reward weights and totals.
///
/// Reward arithmetic only needs field operations and ordering, so exact
/// rationals (`Ratio<i64>`) work as well as floats.
pub trait Weight:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Weight for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

pub(crate) fn clamp01<T: Weight>(v: T) -> T {
    if v < T::zero() {
        T::zero()
    } else if v > T::one() {
        T::one()
    } else {
        v
    }
}
