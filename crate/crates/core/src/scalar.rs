//! Arithmetic contract shared by the exact-rational and floating-point
//! backends. Every solver in this crate is written once against [`Scalar`];
//! the concrete backends are `f64` and [`crate::Rational`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// An ordered field with the operations the path solver needs.
///
/// The rational backend is exact: values are kept in lowest terms and
/// equality is mathematical equality. The float backend has IEEE double
/// semantics; equality used for tie detection goes through [`Tolerance`],
/// never raw bitwise comparison.
pub trait Scalar:
    Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + 'static
{
    /// True for backends where arithmetic carries no rounding error.
    const EXACT: bool;

    fn from_int(n: i64) -> Self;

    /// The value `num/den`. Panics if `den` is zero.
    fn ratio(num: i64, den: i64) -> Self;

    /// Division that reports a zero divisor instead of producing a silent
    /// infinity or panic.
    fn try_div(&self, rhs: &Self) -> Result<Self>;

    /// Square root. The rational backend succeeds only on perfect squares.
    fn sqrt(&self) -> Result<Self>;

    fn to_f64(&self) -> f64;

    /// Parse the text form used by the CLI file formats: `p/q` or an
    /// integer for rationals, decimal or scientific notation for floats.
    /// The rational backend rejects inexact (decimal point) input.
    fn parse(text: &str) -> Result<Self>;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            Err(Error::DivisionByZero)
        } else {
            Ok(self / rhs)
        }
    }

    fn sqrt(&self) -> Result<Self> {
        if *self < 0.0 {
            Err(Error::IrrationalResult(self.to_string()))
        } else {
            Ok(f64::sqrt(*self))
        }
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let n: f64 = num
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
            let d: f64 = den
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
            if d == 0.0 {
                return Err(Error::DivisionByZero);
            }
            Ok(n / d)
        } else {
            text.parse()
                .map_err(|_| Error::Parse(format!("bad number {text:?}")))
        }
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn try_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            Err(Error::DivisionByZero)
        } else {
            Ok(self / rhs)
        }
    }

    fn sqrt(&self) -> Result<Self> {
        if self.is_negative() {
            return Err(Error::IrrationalResult(self.to_string()));
        }
        let num = self.numer();
        let den = self.denom();
        let sn = num.sqrt();
        let sd = den.sqrt();
        if &(&sn * &sn) == num && &(&sd * &sd) == den {
            Ok(BigRational::new(sn, sd))
        } else {
            Err(Error::IrrationalResult(self.to_string()))
        }
    }

    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let n = BigInt::from_str(num.trim())
                .map_err(|_| Error::Parse(format!("bad rational {text:?}")))?;
            let d = BigInt::from_str(den.trim())
                .map_err(|_| Error::Parse(format!("bad rational {text:?}")))?;
            if d.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(BigRational::new(n, d))
        } else {
            let n = BigInt::from_str(text)
                .map_err(|_| Error::Parse(format!("bad rational {text:?}")))?;
            Ok(BigRational::from_integer(n))
        }
    }
}

/// Comparison tolerances for the float backend. Both are exactly zero on
/// the rational backend, where ties and zeros are decided exactly.
#[derive(Clone, Debug)]
pub struct Tolerance<S> {
    /// Relative tolerance for "two remainder ratios are equal".
    pub tie_rel: S,
    /// Absolute tolerance for "a coefficient has reached zero".
    pub zero_abs: S,
}

impl<S: Scalar> Tolerance<S> {
    pub fn exact() -> Self {
        Tolerance {
            tie_rel: S::zero(),
            zero_abs: S::zero(),
        }
    }

    /// Backend-appropriate default: zeros when exact, otherwise
    /// `tie_rel = 1e-9` and `zero_abs = 1e-12`.
    pub fn standard() -> Self {
        if S::EXACT {
            Self::exact()
        } else {
            Tolerance {
                tie_rel: S::ratio(1, 1_000_000_000),
                zero_abs: S::ratio(1, 1_000_000_000_000),
            }
        }
    }
}

/// `|a - b| <= tie_rel * max(1, |a|, |b|)`. Exact equality on the
/// rational backend (where `tie_rel` is zero).
pub fn approx_equal<S: Scalar>(a: &S, b: &S, tol: &Tolerance<S>) -> bool {
    let diff = (a.clone() - b.clone()).abs();
    let mut scale = S::one();
    let aa = a.abs();
    if aa > scale {
        scale = aa;
    }
    let ab = b.abs();
    if ab > scale {
        scale = ab;
    }
    diff <= tol.tie_rel.clone() * scale
}

/// `|a| <= zero_abs`; reduces to an exact zero test on the rational backend.
pub fn near_zero<S: Scalar>(a: &S, tol: &Tolerance<S>) -> bool {
    a.abs() <= tol.zero_abs
}
