use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Scalar};

/// A probability-like parameter. Strings such as `"5/8"` or `"0.9"` parse to
/// exact rationals; values built from an `f64` carry no exact form.
#[derive(Clone, Debug, PartialEq)]
pub struct Prob {
    value: f64,
    exact: Option<BigRational>,
}

impl Prob {
    pub fn from_f64(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Self { value: rational_to_f64(&r), exact: Some(r) }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    /// Exact form if present, otherwise the binary value of the float.
    pub fn to_rational(&self) -> BigRational {
        match &self.exact {
            Some(r) => r.clone(),
            None => BigRational::from_float(self.value).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn to_scalar<T: Scalar>(&self) -> T {
        match &self.exact {
            Some(r) => T::from_rational(r),
            None => T::from_f64(self.value),
        }
    }

    /// Exact comparison when this value is rational, float comparison otherwise.
    pub fn cmp_rational(&self, other: &BigRational) -> Ordering {
        match &self.exact {
            Some(r) => r.cmp(other),
            None => self
                .value
                .partial_cmp(&rational_to_f64(other))
                .unwrap_or(Ordering::Equal),
        }
    }

    pub fn in_unit_interval(&self) -> bool {
        match &self.exact {
            Some(r) => !r.is_negative() && *r <= BigRational::one(),
            None => (0.0..=1.0).contains(&self.value),
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) => write!(f, "{r}"),
            None => write!(f, "{}", self.value),
        }
    }
}

impl FromStr for Prob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParam(format!("cannot parse {s:?} as a number"));
        if let Some((num, den)) = s.split_once('/') {
            let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
            let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            return Ok(Self::from_rational(BigRational::new(num, den)));
        }
        parse_decimal(s).map(Self::from_rational).ok_or_else(bad)
    }
}

/// Decimal literal with optional exponent, read exactly.
fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let mut num = BigInt::from_str(&digits).ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * ten.pow(scale as u32))
    } else {
        BigRational::new(num, ten.pow((-scale) as u32))
    };
    Some(r)
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.exact {
            Some(r) => ser.serialize_str(&r.to_string()),
            None => ser.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Num(f64),
        }
        match Repr::deserialize(de)? {
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Num(v) => Ok(Prob::from_f64(v)),
        }
    }
}

/// Signed coordinate direction `±e_i`. Axis is zero-based internally and
/// printed one-based (`+1`, `-2`, ...).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignedAxis {
    pub axis: usize,
    pub positive: bool,
}

impl SignedAxis {
    pub const E1: SignedAxis = SignedAxis { axis: 0, positive: true };

    pub fn from_direction(k: usize) -> Self {
        Self { axis: k / 2, positive: k.is_multiple_of(2) }
    }

    /// Index in the fixed ordering `+e_1, -e_1, ..., +e_d, -e_d`.
    pub fn direction(self) -> usize {
        2 * self.axis + usize::from(!self.positive)
    }

    pub fn sign(self) -> i64 {
        if self.positive {
            1
        } else {
            -1
        }
    }
}

impl Default for SignedAxis {
    fn default() -> Self {
        Self::E1
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.positive { '+' } else { '-' }, self.axis + 1)
    }
}

impl FromStr for SignedAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (positive, rest) = match s.as_bytes().first() {
            Some(b'-') => (false, &s[1..]),
            Some(b'+') => (true, &s[1..]),
            _ => (true, s),
        };
        match rest.parse::<usize>() {
            Ok(i) if i >= 1 => Ok(Self { axis: i - 1, positive }),
            _ => Err(Error::InvalidParam(format!("bad signed axis {s:?}"))),
        }
    }
}

impl Serialize for SignedAxis {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SignedAxis {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(de)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Parameters of a MERW (`q = None`) or of a d-ERW (`q = Some(..)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub d: usize,
    pub p: Prob,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Prob>,
    #[serde(default)]
    pub initial_step: SignedAxis,
}

impl WalkParams {
    pub fn new(d: usize, p: Prob) -> Result<Self> {
        let params = Self { d, p, q: None, initial_step: SignedAxis::E1 };
        params.validate()?;
        Ok(params)
    }

    /// Shorthand for exact rational `p = num/den`.
    pub fn rational(d: usize, num: i64, den: i64) -> Result<Self> {
        Self::new(d, Prob::from_ratio(num, den))
    }

    pub fn with_q(mut self, q: Prob) -> Result<Self> {
        self.q = Some(q);
        self.validate()?;
        Ok(self)
    }

    pub fn with_initial_step(mut self, step: SignedAxis) -> Result<Self> {
        self.initial_step = step;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParam("d must be at least 1".into()));
        }
        if !self.p.in_unit_interval() {
            return Err(Error::InvalidParam(format!("p = {} outside [0, 1]", self.p)));
        }
        if let Some(q) = &self.q {
            if !q.in_unit_interval() {
                return Err(Error::InvalidParam(format!("q = {q} outside [0, 1]")));
            }
        }
        if self.initial_step.axis >= self.d {
            return Err(Error::InvalidParam(format!(
                "initial step {} outside dimension {}",
                self.initial_step, self.d
            )));
        }
        Ok(())
    }

    pub fn is_derw(&self) -> bool {
        self.q.is_some()
    }

    /// The same walk viewed as a MERW (drops `q`).
    pub fn merw(&self) -> Self {
        Self { q: None, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Diffusive,
    Critical,
    Superdiffusive,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Diffusive => "diffusive",
            Regime::Critical => "critical",
            Regime::Superdiffusive => "superdiffusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstants<T> {
    pub a: T,
    pub p_d: T,
    pub regime: Regime,
}

/// `(2d+1)/(4d)` as an exact rational.
pub fn critical_p(d: usize) -> BigRational {
    BigRational::new(BigInt::from(2 * d + 1), BigInt::from(4 * d))
}

/// `a = (2dp - 1)/(2d - 1)`.
pub fn memory_exponent<T: Scalar>(d: usize, p: &T) -> T {
    let two_d = T::from_u64(2 * d as u64);
    (two_d.clone() * p.clone() - T::one()) / (two_d - T::one())
}

pub fn regime(params: &WalkParams) -> Regime {
    match params.p.cmp_rational(&critical_p(params.d)) {
        Ordering::Less => Regime::Diffusive,
        Ordering::Equal => Regime::Critical,
        Ordering::Greater => Regime::Superdiffusive,
    }
}

pub fn derived_constants<T: Scalar>(params: &WalkParams) -> DerivedConstants<T> {
    let p: T = params.p.to_scalar();
    DerivedConstants {
        a: memory_exponent(params.d, &p),
        p_d: T::from_rational(&critical_p(params.d)),
        regime: regime(params),
    }
}

/// `A = (dp + d - 1)/(2d - 1)` and `B = d(1 - p)/(2d - 1)` of the limit's
/// fixed-point equation; `A + B = 1`, `2A = 1 + a`.
pub fn urn_weights<T: Scalar>(d: usize, p: &T) -> (T, T) {
    let dd = T::from_u64(d as u64);
    let den = T::from_u64(2 * d as u64 - 1);
    let big_a = (dd.clone() * p.clone() + dd.clone() - T::one()) / den.clone();
    let big_b = dd * (T::one() - p.clone()) / den;
    (big_a, big_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parse_exact() {
        let p: Prob = "5/8".parse().unwrap();
        assert_eq!(p.exact(), Some(&q(5, 8)));
        let p: Prob = "0.9".parse().unwrap();
        assert_eq!(p.exact(), Some(&q(9, 10)));
        assert_eq!(p.value(), 0.9);
        let p: Prob = "25e-2".parse().unwrap();
        assert_eq!(p.exact(), Some(&q(1, 4)));
        assert!("1/0".parse::<Prob>().is_err());
        assert!("abc".parse::<Prob>().is_err());
        assert!(".".parse::<Prob>().is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let params = WalkParams::rational(2, 5, 8).unwrap();
        let json = serde_json::to_string(&params).unwrap();
        assert!(json.contains("\"5/8\""));
        let back: WalkParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, params);
        let f: WalkParams = serde_json::from_str(r#"{"d":1,"p":0.5}"#).unwrap();
        assert_eq!(f.initial_step, SignedAxis::E1);
        assert!(f.p.exact().is_none());
    }

    #[test]
    fn signed_axis_roundtrip() {
        for s in ["+1", "-1", "+3", "-2"] {
            let a: SignedAxis = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
            assert_eq!(SignedAxis::from_direction(a.direction()), a);
        }
        assert_eq!("2".parse::<SignedAxis>().unwrap().direction(), 2);
        assert!("0".parse::<SignedAxis>().is_err());
    }

    #[test]
    fn validation() {
        assert!(WalkParams::rational(0, 1, 2).is_err());
        assert!(WalkParams::rational(1, 3, 2).is_err());
        assert!(WalkParams::rational(1, -1, 2).is_err());
        let w = WalkParams::rational(2, 1, 2).unwrap();
        assert!(w.clone().with_q(Prob::from_f64(1.5)).is_err());
        assert!(w.with_initial_step("-3".parse().unwrap()).is_err());
    }

    #[test]
    fn derived_examples() {
        let c = derived_constants::<BigRational>(&WalkParams::rational(2, 5, 8).unwrap());
        assert_eq!(c.a, q(1, 2));
        assert_eq!(c.regime, Regime::Critical);
        let c = derived_constants::<BigRational>(&WalkParams::rational(1, 3, 4).unwrap());
        assert_eq!(c.p_d, q(3, 4));
        assert_eq!(c.a, q(1, 2));
        let c = derived_constants::<BigRational>(&WalkParams::rational(3, 1, 6).unwrap());
        assert_eq!(c.a, q(0, 1));
        assert_eq!(c.regime, Regime::Diffusive);
        assert_eq!(critical_p(3), q(7, 12));
    }

    #[test]
    fn float_critical_is_classified_by_value() {
        let w = WalkParams::new(1, Prob::from_f64(0.75)).unwrap();
        assert_eq!(regime(&w), Regime::Critical);
        let w = WalkParams::new(2, "0.625".parse().unwrap()).unwrap();
        assert_eq!(regime(&w), Regime::Critical);
    }

    #[test]
    fn urn_weight_identities() {
        for d in 1..5usize {
            for (n, m) in [(0i64, 1i64), (1, 3), (5, 8), (9, 10), (1, 1)] {
                let p = q(n, m);
                let (a_, b_) = urn_weights(d, &p);
                assert_eq!(a_.clone() + b_, q(1, 1));
                assert_eq!(a_ * q(2, 1), q(1, 1) + memory_exponent(d, &p));
            }
        }
    }
}
