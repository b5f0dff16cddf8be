//! Power series of the characteristic functions.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::moments::moment_recursion;
use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Scalar};
use crate::walk::{memory_exponent, urn_weights, Prob};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesTarget {
    /// `φ_W(x) = Σ r_n (ix)^n / n!`
    W,
    /// `φ_Y(x) = Σ r_n (ix)^n / (Γ((2p-1)n + 1) n!)`
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub re: f64,
    pub im: f64,
    pub order: usize,
    /// First omitted term of the majorant `Σ (p|x|/(2p - 1))^n`.
    pub majorant_next: f64,
    /// `|c_order x^order|`, the last term actually summed.
    pub last_term: f64,
}

impl SeriesValue {
    pub fn value(&self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }
}

/// Coefficients `c_n` of `Σ c_n x^n` for the chosen target, `n = 0..=order`.
pub fn d1_coefficients(p: &Prob, order: usize, target: SeriesTarget) -> Result<Vec<Complex<f64>>> {
    let table = moment_recursion(p, order)?;
    let pf = rational_to_f64(&table.p);
    let mut fact = BigRational::one();
    let mut out = Vec::with_capacity(order + 1);
    for n in 0..=order {
        if n > 0 {
            fact *= BigRational::from_integer(n.into());
        }
        let mag = match target {
            SeriesTarget::W => rational_to_f64(&(&table.r[n] / &fact)),
            SeriesTarget::Y => {
                let rn = rational_to_f64(&table.r[n]);
                let lf = ln_gamma(n as f64 + 1.0);
                rn.signum() * (rn.abs().ln() - lf - ln_gamma((2.0 * pf - 1.0) * n as f64 + 1.0)).exp()
            }
        };
        out.push(if n == 0 { Complex::new(1.0, 0.0) } else { i_pow(n) * mag });
    }
    Ok(out)
}

fn i_pow(n: usize) -> Complex<f64> {
    match n % 4 {
        0 => Complex::new(1.0, 0.0),
        1 => Complex::new(0.0, 1.0),
        2 => Complex::new(-1.0, 0.0),
        _ => Complex::new(0.0, -1.0),
    }
}

/// Horner evaluation of `Σ c_n x^n` at real `x`.
pub fn eval_series(coeffs: &[Complex<f64>], x: f64) -> Complex<f64> {
    coeffs.iter().rev().fold(Complex::zero(), |acc, c| acc * x + c)
}

/// `φ_W` needs `|x| < (2p - 1)/p`; `φ_Y` is entire.
pub fn charfun_series(p: &Prob, x: f64, order: usize, target: SeriesTarget) -> Result<SeriesValue> {
    let pf = p.value();
    let radius = (2.0 * pf - 1.0) / pf;
    let outside = match BigRational::from_float(x.abs()) {
        Some(xr) => {
            let pr = p.to_rational();
            xr * &pr >= pr * BigRational::from_integer(2.into()) - BigRational::one()
        }
        None => true,
    };
    if target == SeriesTarget::W && outside {
        return Err(Error::Domain(format!("|x| = {} outside the disc |x| < (2p-1)/p = {radius}", x.abs())));
    }
    let coeffs = d1_coefficients(p, order, target)?;
    Ok(SeriesValue::from_coeffs(&coeffs, x, pf))
}

impl SeriesValue {
    pub fn from_coeffs(coeffs: &[Complex<f64>], x: f64, p: f64) -> Self {
        let order = coeffs.len() - 1;
        let v = eval_series(coeffs, x);
        Self {
            re: v.re,
            im: v.im,
            order,
            majorant_next: (p * x.abs() / (2.0 * p - 1.0)).powi(order as i32 + 1),
            last_term: coeffs[order].norm() * x.abs().powi(order as i32),
        }
    }
}

/// Taylor coefficients of the characteristic function of `w` in dimension
/// `d`, from `φ + a x φ' = A φ² + B |φ|²` with `c_0 = 1`, `c_1 = i`:
/// `Re c_k = Re R_k/(a k - 1)`, `Im c_k = Im R_k/(a (k - 1))`, where
/// `R_k = Σ_{j=1}^{k-1} (A c_j c_{k-j} + B c_j conj(c_{k-j}))`.
pub fn series_coefficients_general_d<T: Scalar>(d: usize, p: &T, order: usize) -> Vec<Complex<T>> {
    let a = memory_exponent(d, p);
    let (big_a, big_b) = urn_weights(d, p);
    let mut c: Vec<Complex<T>> = Vec::with_capacity(order + 1);
    c.push(Complex::new(T::one(), T::zero()));
    if order >= 1 {
        c.push(Complex::new(T::zero(), T::one()));
    }
    for k in 2..=order {
        let mut re = T::zero();
        let mut im = T::zero();
        for j in 1..k {
            let (u, v) = (&c[j], &c[k - j]);
            // c_j c_{k-j}
            let pr = u.re.clone() * v.re.clone() - u.im.clone() * v.im.clone();
            let pi = u.re.clone() * v.im.clone() + u.im.clone() * v.re.clone();
            // c_j conj(c_{k-j})
            let qr = u.re.clone() * v.re.clone() + u.im.clone() * v.im.clone();
            let qi = u.im.clone() * v.re.clone() - u.re.clone() * v.im.clone();
            re = re + big_a.clone() * pr + big_b.clone() * qr;
            im = im + big_a.clone() * pi + big_b.clone() * qi;
        }
        let kk = T::from_u64(k as u64);
        let re_den = a.clone() * kk.clone() - T::one();
        let im_den = a.clone() * (kk - T::one());
        c.push(Complex::new(re / re_den, im / im_den));
    }
    c
}

/// `f64` coefficients for `d`, `p` (exact arithmetic when `p` is rational).
pub fn general_d_coefficients_f64(d: usize, p: &Prob, order: usize) -> Result<Vec<Complex<f64>>> {
    let params = crate::walk::WalkParams::new(d, p.clone())?;
    if crate::walk::regime(&params) != crate::walk::Regime::Superdiffusive {
        return Err(Error::Regime(format!("series coefficients need p > p_d, got p = {p}")));
    }
    Ok(match p.exact() {
        Some(q) => series_coefficients_general_d(d, q, order)
            .into_iter()
            .map(|z| Complex::new(z.re.as_f64(), z.im.as_f64()))
            .collect(),
        None => series_coefficients_general_d(d, &p.value(), order),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_one() {
        let v = charfun_series(&Prob::from_ratio(9, 10), 0.0, 20, SeriesTarget::W).unwrap();
        assert_eq!(v.value(), Complex::new(1.0, 0.0));
        let v = charfun_series(&Prob::from_ratio(9, 10), 0.0, 20, SeriesTarget::Y).unwrap();
        assert_eq!(v.value(), Complex::new(1.0, 0.0));
    }

    #[test]
    fn p_one_is_exponential() {
        let v = charfun_series(&Prob::from_ratio(1, 1), 0.5, 40, SeriesTarget::W).unwrap();
        let expect = Complex::new(1.0, 0.0) / Complex::new(1.0, -0.5);
        assert!((v.value() - expect).norm() < 1e-12);
        let y = charfun_series(&Prob::from_ratio(1, 1), 2.0, 40, SeriesTarget::Y).unwrap();
        assert!((y.value() - Complex::new(0.0, 2.0).exp()).norm() < 1e-12);
    }

    #[test]
    fn domain_guard() {
        let p = Prob::from_ratio(4, 5);
        assert!(matches!(charfun_series(&p, 0.75, 10, SeriesTarget::W), Err(Error::Domain(_))));
        assert!(charfun_series(&p, 5.0, 10, SeriesTarget::Y).is_ok());
    }

    #[test]
    fn general_d_identities() {
        use num_rational::BigRational;
        for d in 1..=4usize {
            for (n, m) in [(4, 5), (9, 10), (7, 8), (1, 1)] {
                let p = BigRational::new(n.into(), m.into());
                let (a_, b_) = urn_weights(d, &p);
                assert_eq!(a_.clone() + b_, BigRational::one());
                assert_eq!(BigRational::one() + memory_exponent(d, &p), a_ * BigRational::from_integer(2.into()));
            }
        }
    }

    #[test]
    fn general_d_matches_moments_at_d1() {
        let p = Prob::from_ratio(4, 5);
        let ours = series_coefficients_general_d(1, p.exact().unwrap(), 10);
        let table = moment_recursion(&p, 10).unwrap();
        let mut fact = BigRational::one();
        for n in 1..=10 {
            fact *= BigRational::from_integer(n.into());
            let mag = &table.r[n] / &fact;
            let (re, im) = match n % 4 {
                0 => (mag, BigRational::zero()),
                1 => (BigRational::zero(), mag),
                2 => (-mag, BigRational::zero()),
                _ => (BigRational::zero(), -mag),
            };
            assert_eq!(ours[n].re, re, "n = {n}");
            assert_eq!(ours[n].im, im, "n = {n}");
        }
    }
}
