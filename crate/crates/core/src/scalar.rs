//! Scalar abstraction so the solver runs at any floating-point width.

use std::fmt;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the whole crate is generic over.
///
/// Blanket-implemented for anything float-like; in practice `f64` (the
/// default aliases at the crate root) and `f32`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` literal into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal not representable in scalar type")
    }

    /// Convert a `usize` (grid sizes, sample counts) into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize not representable in scalar type")
    }

    #[inline]
    fn half(self) -> Self {
        self / Self::of(2.0)
    }

    #[inline]
    fn two() -> Self {
        Self::of(2.0)
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + AddAssign
        + Sum
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}
