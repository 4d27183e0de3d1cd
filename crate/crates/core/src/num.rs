//! Integer scalars the evaluator can run over.
//!
//! Formulas carry arbitrary-precision literals. Exhaustive checks over small
//! boxes run much faster on machine integers, so evaluation is generic and
//! reports overflow instead of wrapping.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_bigint::BigInt;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

pub trait IntScalar:
    Clone + Ord + Hash + Debug + Display + Signed + CheckedAdd + CheckedSub + CheckedMul + Send + Sync + 'static
{
    fn from_big(v: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn from_i64(v: i64) -> Self;

    /// Quotient rounded toward zero; `None` on a zero divisor or overflow.
    fn trunc_div(&self, rhs: &Self) -> Option<Self>;
    /// Remainder with the sign of the dividend; `None` on a zero divisor.
    fn trunc_rem(&self, rhs: &Self) -> Option<Self>;
}

impl IntScalar for i64 {
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i64()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn from_i64(v: i64) -> Self {
        v
    }
    fn trunc_div(&self, rhs: &Self) -> Option<Self> {
        self.checked_div(*rhs)
    }
    fn trunc_rem(&self, rhs: &Self) -> Option<Self> {
        self.checked_rem(*rhs)
    }
}

impl IntScalar for i128 {
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn trunc_div(&self, rhs: &Self) -> Option<Self> {
        self.checked_div(*rhs)
    }
    fn trunc_rem(&self, rhs: &Self) -> Option<Self> {
        self.checked_rem(*rhs)
    }
}

impl IntScalar for BigInt {
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    // BigInt's `/` and `%` already truncate toward zero.
    fn trunc_div(&self, rhs: &Self) -> Option<Self> {
        (!rhs.is_zero()).then(|| self / rhs)
    }
    fn trunc_rem(&self, rhs: &Self) -> Option<Self> {
        (!rhs.is_zero()).then(|| self % rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agree<T: IntScalar>(a: i64, b: i64) {
        let (x, y) = (T::from_i64(a), T::from_i64(b));
        let big_q = BigInt::from(a).trunc_div(&BigInt::from(b));
        assert_eq!(x.trunc_div(&y).map(|v| v.to_big()), big_q);
        let big_r = BigInt::from(a).trunc_rem(&BigInt::from(b));
        assert_eq!(x.trunc_rem(&y).map(|v| v.to_big()), big_r);
    }

    #[test]
    fn truncation_matches_across_scalars() {
        for a in -7..=7 {
            for b in -3..=3 {
                agree::<i64>(a, b);
                agree::<i128>(a, b);
            }
        }
        assert_eq!((-7i64).trunc_div(&2), Some(-3));
        assert_eq!((-7i64).trunc_rem(&2), Some(-1));
        assert_eq!(7i64.trunc_rem(&-2), Some(1));
    }

    #[test]
    fn overflow_is_reported() {
        assert_eq!(i64::MIN.trunc_div(&-1), None);
        assert_eq!(i64::from_big(&(BigInt::from(i64::MAX) + 1)), None);
    }
}
