//! Scalar abstraction shared by the step laws, recursions and series code.
//!
//! Implemented for `f32`, `f64` and exact rationals (`BigRational`).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    fn from_i64(v: i64) -> Self;
    fn from_u64(v: u64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    /// Rationals take the exact binary value of `v`.
    fn from_f64(v: f64) -> Self;
    fn as_f64(&self) -> f64;
    fn is_exact() -> bool;

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            #[inline]
            fn from_u64(v: u64) -> Self {
                v as $t
            }
            #[inline]
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }
            fn from_rational(r: &BigRational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn as_f64(&self) -> f64 {
                *self as f64
            }
            fn is_exact() -> bool {
                false
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_exact() -> bool {
        true
    }
}

/// Exact rational to `f64`, robust to numerators and denominators far outside
/// the double range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_roundtrip() {
        let q = <BigRational as Scalar>::from_ratio(5, 8);
        assert_eq!(q.as_f64(), 0.625);
        assert_eq!(<f64 as Scalar>::from_rational(&q), 0.625);
        assert!(<BigRational as Scalar>::is_exact());
        assert!(!<f32 as Scalar>::is_exact());
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = BigInt::from(10).pow(400u32);
        let r = BigRational::new(big.clone() * BigInt::from(3), big);
        assert_eq!(rational_to_f64(&r), 3.0);
    }
}
