//! Moments `r_n = E W_1^n` of the one-dimensional limit by the odd/even
//! recursion, and `y_n = E Y_1^n = r_n / Γ((2p - 1)n + 1)`.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Scalar};
use crate::walk::Prob;

/// Default cap on the order.
pub const DEFAULT_ORDER: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable<T> {
    pub p: BigRational,
    /// `r[0] = 1`, `r[n] = E W_1^n` for `n = 1..=order`.
    pub r: Vec<T>,
    /// `y[n] = E Y_1^n` in floating point.
    pub y: Vec<f64>,
    pub order: usize,
}

/// Pascal row `C(n, 0..=n)`.
fn binomial_row(n: usize) -> Vec<u128> {
    let mut row = vec![1u128; n + 1];
    for k in 1..n {
        row[k] = row[k - 1] * (n - k + 1) as u128 / k as u128;
    }
    row
}

/// `r_1..r_order` for any scalar type, without regime checks. `r[0] = 1`.
///
/// Odd `n`: `[(n+1)(2p-1) - 1] r_{n+1} = 2 Σ_{i=1}^{(n-1)/2} C(n,2i-1) r_{2i} r_{n+1-2i}
///   + 2(2p-1) Σ_{i=1}^{(n+1)/2} C(n,2i-1) r_{2i-1} r_{n+2-2i}`.
/// Even `n`: `n(2p-1) r_{n+1} = 2p Σ_{i=1}^{n/2} (C(n,2i-1) + C(n,2i)) r_{2i} r_{n+1-2i}`.
pub fn moment_recursion_in<T: Scalar>(p: &T, order: usize) -> Vec<T> {
    let one = T::one();
    let two = T::from_u64(2);
    let b = two.clone() * p.clone() - one.clone();
    let mut r = vec![T::one(); order.max(1) + 1];
    r.truncate(order + 1);
    for n in 1..order {
        let c = binomial_row(n);
        let bin = |k: usize| T::from_u64(c[k] as u64);
        let next = if n % 2 == 1 {
            let mut s1 = T::zero();
            for i in 1..=(n - 1) / 2 {
                s1 = s1 + bin(2 * i - 1) * r[2 * i].clone() * r[n + 1 - 2 * i].clone();
            }
            let mut s2 = T::zero();
            for i in 1..=n.div_ceil(2) {
                s2 = s2 + bin(2 * i - 1) * r[2 * i - 1].clone() * r[n + 2 - 2 * i].clone();
            }
            let den = T::from_u64(n as u64 + 1) * b.clone() - one.clone();
            (two.clone() * s1 + two.clone() * b.clone() * s2) / den
        } else {
            let mut s = T::zero();
            for i in 1..=n / 2 {
                s = s + (bin(2 * i - 1) + bin(2 * i)) * r[2 * i].clone() * r[n + 1 - 2 * i].clone();
            }
            two.clone() * p.clone() * s / (T::from_u64(n as u64) * b.clone())
        };
        r[n + 1] = next;
    }
    r
}

fn check_p(p: &Prob) -> Result<BigRational> {
    let exact = p.to_rational();
    let three_quarters = BigRational::new(3.into(), 4.into());
    if exact <= three_quarters || exact > BigRational::one() {
        return Err(Error::Regime(format!("moment recursion needs 3/4 < p ≤ 1, got {p}")));
    }
    Ok(exact)
}

/// `y_n = r_n / Γ((2p - 1)n + 1)` via log-Γ.
fn gamma_scaled(r: f64, n: usize, p: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    r.signum() * (r.abs().ln() - ln_gamma((2.0 * p - 1.0) * n as f64 + 1.0)).exp()
}

/// Moment table in scalar type `T` (exact for `BigRational`).
pub fn moment_table<T: Scalar>(p: &Prob, order: usize) -> Result<MomentTable<T>> {
    let exact = check_p(p)?;
    let pt = T::from_rational(&exact);
    let r = moment_recursion_in(&pt, order);
    let pf = rational_to_f64(&exact);
    let y = r.iter().enumerate().map(|(n, rn)| gamma_scaled(rn.as_f64(), n, pf)).collect();
    Ok(MomentTable { p: exact, r, y, order })
}

/// Exact table, `p` in `(3/4, 1]`.
pub fn moment_recursion(p: &Prob, order: usize) -> Result<MomentTable<BigRational>> {
    moment_table(p, order)
}

impl MomentTable<BigRational> {
    /// CSV `n,r_num,r_den,y_float`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,r_num,r_den,y_float")?;
        for n in 1..=self.order {
            let r = &self.r[n];
            writeln!(w, "{n},{},{},{:.17e}", r.numer(), r.denom(), self.y[n])?;
        }
        Ok(())
    }
}

/// Closed form of `E Y_1^5`:
/// `60p(16p² - 9p - 1) / ((4p - 3)²(8p - 5) Γ(10p - 4))`.
pub fn y5_closed_form(p: f64) -> f64 {
    60.0 * p * (16.0 * p * p - 9.0 * p - 1.0)
        / ((4.0 * p - 3.0).powi(2) * (8.0 * p - 5.0) * statrs::function::gamma::gamma(10.0 * p - 4.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub r_abs: f64,
    pub bound: f64,
    /// `ln(bound / |r_n|)`; negative means violated.
    pub log_margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub holds: bool,
    pub first_violation: Option<usize>,
    pub rows: Vec<BoundRow>,
}

/// Checks `|r_n| ≤ (p/(2p - 1))^{n-1} n!` exactly for `n = 1..=order`.
pub fn verify_moment_bound(table: &MomentTable<BigRational>) -> BoundReport {
    let p = &table.p;
    let ratio = p / (p * BigRational::from_integer(2.into()) - BigRational::one());
    let mut power = BigRational::one();
    let mut fact = BigInt::one();
    let mut rows = Vec::with_capacity(table.order);
    for n in 1..=table.order {
        fact *= BigInt::from(n);
        if n > 1 {
            power *= &ratio;
        }
        let bound = &power * BigRational::from_integer(fact.clone());
        let r_abs = table.r[n].abs();
        let holds = r_abs <= bound;
        let (rf, bf) = (rational_to_f64(&r_abs), rational_to_f64(&bound));
        let log_margin = if r_abs.is_zero() { f64::INFINITY } else { bf.ln() - rf.ln() };
        rows.push(BoundRow { n, r_abs: rf, bound: bf, log_margin, holds });
    }
    let first_violation = rows.iter().find(|r| !r.holds).map(|r| r.n);
    BoundReport { holds: first_violation.is_none(), first_violation, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_row(4), vec![1, 4, 6, 4, 1]);
        assert_eq!(binomial_row(60)[30], 118_264_581_564_861_424);
    }

    #[test]
    fn p_one_gives_factorials() {
        let t = moment_recursion(&Prob::from_ratio(1, 1), 20).unwrap();
        let mut f = BigInt::one();
        for n in 1..=20 {
            f *= BigInt::from(n);
            assert_eq!(t.r[n], BigRational::from_integer(f.clone()));
        }
        assert!(verify_moment_bound(&t).holds);
    }

    #[test]
    fn second_moment_closed_form() {
        for (n, m) in [(4, 5), (9, 10), (19, 25), (99, 100)] {
            let p = q(n, m);
            let t = moment_recursion(&Prob::from_rational(p.clone()), 2).unwrap();
            let two = q(2, 1);
            let expect = two.clone() * (two.clone() * &p - q(1, 1)) / (q(4, 1) * &p - q(3, 1));
            assert_eq!(t.r[2], expect);
        }
    }

    #[test]
    fn y5_golden_value() {
        let p = 0.8f64;
        let t = moment_recursion(&Prob::from_ratio(4, 5), 10).unwrap();
        let closed = 60.0 * p * (16.0 * p * p - 9.0 * p - 1.0)
            / ((4.0 * p - 3.0).powi(2) * (8.0 * p - 5.0) * statrs::function::gamma::gamma(10.0 * p - 4.0));
        assert!((t.y[5] / closed - 1.0).abs() < 1e-10, "{} vs {closed}", t.y[5]);
    }

    #[test]
    fn known_values_at_four_fifths() {
        let t = moment_recursion(&Prob::from_ratio(4, 5), 6).unwrap();
        let expect = [q(1, 1), q(6, 1), q(24, 1), q(1656, 7), q(12240, 7), q(2_172_960, 91)];
        assert_eq!(&t.r[1..], &expect);
    }

    #[test]
    fn regime_checked() {
        assert!(moment_recursion(&Prob::from_ratio(3, 4), 4).is_err());
        assert!(moment_recursion(&Prob::from_ratio(1, 2), 4).is_err());
        assert!(moment_recursion(&Prob::from_f64(1.01), 4).is_err());
    }

    #[test]
    fn float_route_tracks_exact_route() {
        let exact = moment_recursion(&Prob::from_ratio(9, 10), 30).unwrap();
        let float = moment_table::<f64>(&Prob::from_ratio(9, 10), 30).unwrap();
        for n in 1..=30 {
            let e = rational_to_f64(&exact.r[n]);
            assert!((float.r[n] / e - 1.0).abs() < 1e-11, "n = {n}");
        }
    }

    #[test]
    fn bound_fails_below_one() {
        // r_2 = 6 exceeds 2 p/(2p - 1) = 8/3 at p = 4/5.
        let t = moment_recursion(&Prob::from_ratio(4, 5), 20).unwrap();
        let rep = verify_moment_bound(&t);
        assert_eq!(rep.first_violation, Some(2));
        assert!(rep.rows[0].holds);
        assert_eq!(rep.rows[0].log_margin, 0.0);
    }

    #[test]
    fn csv_format() {
        let t = moment_recursion(&Prob::from_ratio(4, 5), 4).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,r_num,r_den,y_float");
        assert!(lines[4].starts_with("4,1656,7,"));
    }
}
