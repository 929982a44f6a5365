use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Token amount arithmetic used by [`super::Pool`].
///
/// `f64` is the production representation. [`BigRational`] makes every
/// operation except `sqrt` exact, so invariant checks see no rounding.
pub trait Amount:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Square root; exact for rationals whose numerator and denominator
    /// are perfect squares, otherwise the nearest `f64` root.
    fn sqrt(&self) -> Self;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }
}

impl Amount for f64 {
    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Amount for BigRational {
    fn from_f64(v: f64) -> Option<Self> {
        <BigRational as FromPrimitive>::from_f64(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn sqrt(&self) -> Self {
        if self.is_negative() {
            return <BigRational as FromPrimitive>::from_f64(f64::NAN).unwrap_or_else(Zero::zero);
        }
        let (n, d) = (self.numer(), self.denom());
        let (rn, rd): (BigInt, BigInt) = (n.sqrt(), d.sqrt());
        if &(&rn * &rn) == n && &(&rd * &rd) == d {
            return BigRational::new(rn, rd);
        }
        <BigRational as FromPrimitive>::from_f64(Amount::to_f64(self).sqrt()).unwrap_or_else(Zero::zero)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Exact rational from an integer ratio, for tests and fuzzing.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(numer.into(), denom.into())
}
