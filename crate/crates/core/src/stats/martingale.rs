//! The martingales `S̄_n = a_n S_n`, `M_n` and `N_n`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::ensemble::ReplicaEnsemble;
use super::reduce::MeanSe;
use crate::error::Result;
use crate::walk::{memory_exponent, WalkParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaCase {
    Generic,
    /// `a = -1/2`: `γ_n = 1/(n - 1)` from `n = 2`.
    HalfNegative,
    /// `a = -1`: `γ_n = 2/((n - 1)(n - 2))` from `n = 3`.
    MinusOne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleWeights {
    pub a: f64,
    pub case: GammaCase,
    /// First index of `M`.
    pub i_a: u64,
}

impl MartingaleWeights {
    pub fn new(params: &WalkParams) -> Self {
        let a = memory_exponent(params.d, &params.p.to_rational());
        let half = num_rational::BigRational::new((-1).into(), 2.into());
        let minus_one = num_rational::BigRational::from_integer((-1).into());
        let (case, i_a) = if a == half {
            (GammaCase::HalfNegative, 2)
        } else if a == minus_one {
            (GammaCase::MinusOne, 3)
        } else {
            (GammaCase::Generic, 1)
        };
        Self { a: crate::scalar::rational_to_f64(&a), case, i_a }
    }

    /// `a_n = Γ(n)Γ(1 + a)/Γ(n + a)`, so that `a_{n+1}(1 + a/n) = a_n`.
    /// `a = 1` uses `1/n`; `a = -1` uses `n - 1`.
    pub fn a_n(&self, n: u64) -> f64 {
        let nf = n as f64;
        if self.a == 1.0 {
            return 1.0 / nf;
        }
        if self.case == GammaCase::MinusOne {
            return nf - 1.0;
        }
        if n == 1 {
            return 1.0;
        }
        (ln_gamma(nf) + ln_gamma(1.0 + self.a) - ln_gamma(nf + self.a)).exp()
    }

    /// `γ_n` with `γ_{n+1} = (1 + 2a/n) γ_n` and `γ_{i_a} = 1`.
    pub fn gamma_n(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self.case {
            GammaCase::HalfNegative => 1.0 / (nf - 1.0),
            GammaCase::MinusOne => 2.0 / ((nf - 1.0) * (nf - 2.0)),
            GammaCase::Generic => {
                if n == 1 {
                    return 1.0;
                }
                let t = 1.0 + 2.0 * self.a;
                t.signum() * (t.abs().ln() + ln_gamma(nf + 2.0 * self.a) - ln_gamma(2.0 + 2.0 * self.a) - ln_gamma(nf)).exp()
            }
        }
    }

    /// `Σ_{k ≤ n} a_k²`.
    pub fn normalizer(&self, n: u64) -> f64 {
        super::reduce::tree_sum(&(1..=n).map(|k| self.a_n(k).powi(2)).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub n: u64,
    /// Per coordinate, `S̄_{n+1}(i) - S̄_n(i)`.
    pub s_bar: Vec<MeanSe>,
    pub m: Option<MeanSe>,
    pub n_mart: MeanSe,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub weights: MartingaleWeights,
    pub rows: Vec<ResidualRow>,
    /// `E M_{i_a}`.
    pub m_start: MeanSe,
    pub pass: bool,
}

const K_SE: f64 = 4.0;

fn near_zero(m: &MeanSe) -> bool {
    m.within(0.0, K_SE, 1e-12)
}

/// Ensemble means of one-step increments at each checkpoint `n` (step
/// `n → n + 1`), each required within 4 s.e. of 0.
pub fn martingale_residuals(ens: &ReplicaEnsemble) -> Result<ResidualReport> {
    let w = MartingaleWeights::new(&ens.params);
    let d = ens.params.d;
    let a = w.a;
    let i_a = w.i_a;
    // Per replica: M_{i_a}, then per checkpoint (S_n, S_{n+1}).
    let rows = ens.map(|walker| {
        let m_of = |walker: &crate::walk::Walker| {
            let s2 = walker.state().norm2_f64();
            s2 / w.gamma_n(i_a) - 1.0 / w.gamma_n(i_a)
        };
        let mut m_start = None;
        let mut pairs = Vec::with_capacity(ens.checkpoints.len());
        for &c in &ens.checkpoints {
            if m_start.is_none() && c >= i_a {
                walker.run_to(i_a);
                m_start = Some(m_of(walker));
            }
            walker.run_to(c);
            let before = walker.position().to_vec();
            walker.step();
            pairs.push((before, walker.position().to_vec()));
        }
        if m_start.is_none() {
            walker.run_to(i_a);
            m_start = Some(m_of(walker));
        }
        let m_start = m_start.expect("recorded");
        (m_start, pairs)
    })?;
    let m_start = MeanSe::of(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let mut out = Vec::new();
    for (j, &n) in ens.checkpoints.iter().enumerate() {
        let (an, an1) = (w.a_n(n), w.a_n(n + 1));
        let mut s_bar = Vec::with_capacity(d);
        for i in 0..d {
            let inc: Vec<f64> = rows
                .iter()
                .map(|r| {
                    let (s0, s1) = (&r.1[j].0, &r.1[j].1);
                    an1 * s1[i] as f64 - an * s0[i] as f64
                })
                .collect();
            s_bar.push(MeanSe::of(&inc));
        }
        let norms: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| {
                let (s0, s1) = (&r.1[j].0, &r.1[j].1);
                (
                    s0.iter().map(|&x| (x * x) as f64).sum::<f64>(),
                    s1.iter().map(|&x| (x * x) as f64).sum::<f64>(),
                )
            })
            .collect();
        let nf = n as f64;
        let n_inc: Vec<f64> = norms.iter().map(|&(q0, q1)| q1 - q0 - 1.0 - 2.0 * a * q0 / nf).collect();
        let n_mart = MeanSe::of(&n_inc);
        let m = (n >= i_a).then(|| {
            let (g0, g1) = (w.gamma_n(n), w.gamma_n(n + 1));
            MeanSe::of(&norms.iter().map(|&(q0, q1)| q1 / g1 - q0 / g0 - 1.0 / g1).collect::<Vec<_>>())
        });
        let pass = s_bar.iter().all(near_zero) && near_zero(&n_mart) && m.as_ref().is_none_or(near_zero);
        out.push(ResidualRow { n, s_bar, m, n_mart, pass });
    }
    let pass = out.iter().all(|r| r.pass) && near_zero(&m_start);
    Ok(ResidualReport { weights: w, rows: out, m_start, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(d: usize, n: i64, m: i64) -> MartingaleWeights {
        MartingaleWeights::new(&WalkParams::rational(d, n, m).unwrap())
    }

    #[test]
    fn a_n_recursion() {
        for w in [weights(1, 3, 10), weights(2, 4, 5), weights(3, 1, 6), weights(1, 1, 1), weights(1, 0, 1)] {
            assert_eq!(w.a_n(1), if w.case == GammaCase::MinusOne { 0.0 } else { 1.0 });
            for n in 1..200u64 {
                let lhs = w.a_n(n + 1) * (1.0 + w.a / n as f64);
                assert!((lhs - w.a_n(n)).abs() <= 1e-10 * w.a_n(n).abs().max(1.0), "{w:?} n = {n}");
            }
        }
        let half = weights(1, 1, 2);
        assert!((1..100).all(|n| (half.a_n(n) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn gamma_cases() {
        let w = weights(1, 1, 4);
        assert_eq!(w.case, GammaCase::HalfNegative);
        assert_eq!(w.i_a, 2);
        let w = weights(1, 0, 1);
        assert_eq!(w.case, GammaCase::MinusOne);
        assert_eq!(w.gamma_n(3), 1.0);
        for w in [weights(1, 1, 4), weights(1, 0, 1), weights(2, 3, 5), weights(1, 1, 10)] {
            assert_eq!(w.gamma_n(w.i_a), 1.0);
            for n in w.i_a..300 {
                let lhs = w.gamma_n(n) * (1.0 + 2.0 * w.a / n as f64);
                assert!((lhs / w.gamma_n(n + 1) - 1.0).abs() < 1e-10, "{w:?} n = {n}");
            }
        }
    }

    #[test]
    fn p_one_s_bar_is_exact() {
        let ens = ReplicaEnsemble::new(WalkParams::rational(1, 1, 1).unwrap(), 4, 1, vec![1, 10, 1000]).unwrap();
        let rep = martingale_residuals(&ens).unwrap();
        for r in &rep.rows {
            assert_eq!(r.s_bar[0].mean, 0.0);
            assert_eq!(r.s_bar[0].se, 0.0);
        }
    }

    #[test]
    fn residuals_small_ensemble() {
        for (d, n, m) in [(1, 1, 4), (1, 0, 1), (2, 3, 5)] {
            let ens = ReplicaEnsemble::new(WalkParams::rational(d, n, m).unwrap(), 2000, 3, vec![1, 2, 5, 50]).unwrap();
            let rep = martingale_residuals(&ens).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }
}
