//! Visits to the origin.

use serde::{Deserialize, Serialize};

use super::ensemble::ReplicaEnsemble;
use super::output::StatCurve;
use super::reduce::{column, MeanSe};
use crate::error::{Error, Result};
use crate::walk::{Trajectory, Walker};

/// `#{1 ≤ k ≤ n : S_k = 0}` from a trajectory recorded at every step.
pub fn count_zeros(traj: &Trajectory) -> Result<u64> {
    if traj.times.len() as u64 != traj.n_max {
        return Err(Error::InvalidParam("zero counting needs a stride-1 trajectory".into()));
    }
    Ok(traj.iter().filter(|(_, s)| s.iter().all(|&x| x == 0)).count() as u64)
}

/// Streams `walker` and returns the cumulative zero count at each checkpoint.
pub fn count_zeros_streamed(walker: &mut Walker, checkpoints: &[u64]) -> Vec<u64> {
    let mut zeros = u64::from(walker.state().is_origin());
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        while walker.n() < c {
            walker.step();
            if walker.state().is_origin() {
                zeros += 1;
            }
        }
        out.push(zeros);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub checkpoints: Vec<u64>,
    pub mean: Vec<MeanSe>,
    /// Mean count at the last checkpoint minus the previous one.
    pub last_change: f64,
}

impl ZeroReport {
    pub fn curve(&self) -> StatCurve {
        let mut c = StatCurve::default();
        for (n, m) in self.checkpoints.iter().zip(&self.mean) {
            c.push(*n, m.mean, m.se);
        }
        c
    }

    /// Least-squares growth exponent of the mean count against `n`.
    pub fn growth_exponent(&self) -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .checkpoints
            .iter()
            .zip(&self.mean)
            .filter(|(_, m)| m.mean > 0.0)
            .map(|(&n, m)| ((n as f64).ln(), m.mean.ln()))
            .unzip();
        super::reduce::ls_slope(&xs, &ys)
    }
}

pub fn zero_counts(ens: &ReplicaEnsemble) -> Result<ZeroReport> {
    let rows = ens.map(|w| count_zeros_streamed(w, &ens.checkpoints))?;
    let mean: Vec<MeanSe> = (0..ens.checkpoints.len())
        .map(|j| MeanSe::of(&column(&rows, j).iter().map(|&c| c as f64).collect::<Vec<_>>()))
        .collect();
    let k = mean.len();
    let last_change = if k >= 2 { mean[k - 1].mean - mean[k - 2].mean } else { 0.0 };
    Ok(ZeroReport { checkpoints: ens.checkpoints.clone(), mean, last_change })
}

/// `E #{1 ≤ k ≤ n : S_k = 0}` for the simple random walk on `Z`,
/// `Σ_{j ≤ n/2} C(2j, j)/4^j`.
pub fn srw_expected_zeros(n: u64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for j in 1..=n / 2 {
        term *= (2 * j - 1) as f64 / (2 * j) as f64;
        sum += term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{simulate, WalkParams};

    #[test]
    fn p_one_never_returns() {
        let params = WalkParams::rational(2, 1, 1).unwrap();
        let t = simulate(&params, 500, 1, 0, 1).unwrap();
        assert_eq!(count_zeros(&t).unwrap(), 0);
    }

    #[test]
    fn streamed_matches_trajectory() {
        let params = WalkParams::rational(1, 1, 2).unwrap();
        let t = simulate(&params, 2000, 9, 4, 1).unwrap();
        let mut w = Walker::new(&params, 9, 4).unwrap();
        assert_eq!(count_zeros_streamed(&mut w, &[2000]), vec![count_zeros(&t).unwrap()]);
        // Returns only at even times.
        for (n, s) in t.iter() {
            if s[0] == 0 {
                assert_eq!(n % 2, 0);
            }
        }
        let coarse = simulate(&params, 2000, 9, 4, 10).unwrap();
        assert!(count_zeros(&coarse).is_err());
    }

    #[test]
    fn srw_oracle() {
        assert_eq!(srw_expected_zeros(1), 0.0);
        assert_eq!(srw_expected_zeros(2), 0.5);
        assert_eq!(srw_expected_zeros(4), 0.5 + 0.375);
        let params = WalkParams::rational(1, 1, 2).unwrap();
        let ens = ReplicaEnsemble::new(params, 2000, 2, vec![100, 400]).unwrap();
        let rep = zero_counts(&ens).unwrap();
        for (n, m) in rep.checkpoints.iter().zip(&rep.mean) {
            assert!(m.within(srw_expected_zeros(*n), 4.0, 0.0), "{n} {m:?}");
        }
    }
}
