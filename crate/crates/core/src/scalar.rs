//! Scalar abstraction for the solver arithmetic.

use std::fmt::{Debug, Display};

use num_traits::{FromPrimitive, Num, Signed};

/// Numeric type the solvers compute over.
///
/// Implementations must behave like a totally ordered field: comparisons come
/// from `Ord` and division is expected to be exact. Rational types such as
/// [`crate::Rat`] and [`crate::Rat64`] qualify. Binary floats do not (`f64`
/// has no `Ord`), which keeps approximate arithmetic out of the solver core
/// by construction.
pub trait Scalar:
    Num + Signed + Ord + FromPrimitive + Clone + Debug + Display + 'static
{
}

impl<T> Scalar for T where
    T: Num + Signed + Ord + FromPrimitive + Clone + Debug + Display + 'static
{
}

/// The scalar value of a small integer.
pub fn int<S: Scalar>(value: i64) -> S {
    S::from_i64(value).expect("small integer must be representable")
}

/// The scalar value of `numer / denom`. Division must be exact for `S`.
pub fn frac<S: Scalar>(numer: i64, denom: i64) -> S {
    assert!(denom != 0, "zero denominator");
    int::<S>(numer) / int::<S>(denom)
}

pub(crate) fn sum<S: Scalar>(values: impl IntoIterator<Item = S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v)
}
