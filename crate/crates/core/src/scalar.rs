//! Scalar types usable as exact plane coordinates.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{CheckedAdd, CheckedMul, Num, Signed, ToPrimitive, Zero};

/// An exact, totally ordered field element.
///
/// Geometry never takes square roots, so any exact ordered field works as a
/// coordinate type. Equality must be exact: it is what multiplicity detection
/// relies on.
pub trait Scalar: Clone + Debug + Ord + Hash + Num + Signed + Send + Sync + 'static {
    /// The exact value `numer / denom`, or `None` if it is not representable.
    fn from_ratio(numer: &BigInt, denom: &BigInt) -> Option<Self>;

    /// Lossy conversion for reporting and for float prefilters that fall
    /// back to exact comparison near ties.
    fn to_f64(&self) -> f64;

    /// `self + half · numer / denom`, or `None` if not representable.
    fn offset_by(&self, half: &Self, numer: &BigInt, denom: &BigInt) -> Option<Self> {
        Some(self.clone() + half.clone() * Self::from_ratio(numer, denom)?)
    }

    /// Same result as [`Ord::cmp`], possibly computed faster.
    fn fast_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl Scalar for BigRational {
    fn from_ratio(numer: &BigInt, denom: &BigInt) -> Option<Self> {
        if denom == &BigInt::from(0) {
            return None;
        }
        Some(BigRational::new(numer.clone(), denom.clone()))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    /// One reduction instead of one per intermediate operation.
    fn offset_by(&self, half: &Self, numer: &BigInt, denom: &BigInt) -> Option<Self> {
        if denom.is_zero() {
            return None;
        }
        let (a, b) = (self.numer(), self.denom());
        let (e, f) = (half.numer(), half.denom());
        let top = a * f * denom + b * e * numer;
        Some(BigRational::new(top, b * f * denom))
    }

    /// Cross-multiplication; denominators are kept positive, so this agrees
    /// with the division-based `Ord` of `Ratio`.
    fn fast_cmp(&self, other: &Self) -> Ordering {
        if self.denom() == other.denom() {
            return self.numer().cmp(other.numer());
        }
        (self.numer() * other.denom()).cmp(&(other.numer() * self.denom()))
    }
}

/// Machine-word rationals. Cheap, but arithmetic overflows on deep layouts, so
/// this is only suitable for small destination counts and shallow runs.
impl Scalar for Rational64 {
    fn from_ratio(numer: &BigInt, denom: &BigInt) -> Option<Self> {
        let n = numer.to_i64()?;
        let d = denom.to_i64()?;
        if d == 0 {
            return None;
        }
        Some(Rational64::new(n, d))
    }

    /// Checked, so overflow surfaces as `None` instead of a panic.
    fn offset_by(&self, half: &Self, numer: &BigInt, denom: &BigInt) -> Option<Self> {
        let frac = Self::from_ratio(numer, denom)?;
        self.checked_add(&half.checked_mul(&frac)?)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}
