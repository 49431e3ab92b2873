//! Scalar abstraction shared by the exact-rational and float coefficient
//! modes. Exact mode keeps polynomial identities closed under arithmetic;
//! float mode backs all grid measurements.

use crate::error::{Error, Result};
use num::{BigInt, BigRational, FromPrimitive, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rat = BigRational;

pub trait Scalar: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn is_zero(&self) -> bool;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> Result<Self>;

    fn to_f64(&self) -> f64;

    /// Lossless for floats; exact for rationals (every finite `f64` is a
    /// rational). Callers gate transcendental-valued conversions on `EXACT`.
    fn from_f64(x: f64) -> Self;

    /// Transcendental evaluations reject in exact mode.
    fn sin(&self) -> Result<Self>;
    fn cos(&self) -> Result<Self>;
    fn exp(&self) -> Result<Self>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if *o == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / o)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn sin(&self) -> Result<Self> {
        Ok(f64::sin(*self))
    }
    fn cos(&self) -> Result<Self> {
        Ok(f64::cos(*self))
    }
    fn exp(&self) -> Result<Self> {
        Ok(f64::exp(*self))
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num::One>::one()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, o: &Self) -> Result<Self> {
        if Zero::is_zero(o) {
            return Err(Error::DivisionByZero);
        }
        Ok(self / o)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Fall back to a manual quotient for extreme numerators.
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }

    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite float")
    }

    fn sin(&self) -> Result<Self> {
        Err(Error::ExactModeUnsupported("sin"))
    }
    fn cos(&self) -> Result<Self> {
        Err(Error::ExactModeUnsupported("cos"))
    }
    fn exp(&self) -> Result<Self> {
        Err(Error::ExactModeUnsupported("exp"))
    }
}

/// Exact conversion of an `f64` into a rational (every finite float is one).
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    <BigRational as FromPrimitive>::from_f64(x)
        .ok_or_else(|| Error::InvalidArgument(format!("non-finite float {x} in exact mode")))
}

/// Absolute value helper used by tests over both modes.
pub fn abs_rat(x: &Rat) -> Rat {
    Signed::abs(x)
}
