//! One-step drift of `f(x) = √(log‖x‖)` for the planar walk.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::ensemble::ReplicaEnsemble;
use super::reduce::MeanSe;
use crate::error::{Error, Result};
use crate::walk::memory_exponent;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftOptions {
    pub n_lo: u64,
    pub n_hi: u64,
    /// Only states with `‖S_n‖ > r` enter.
    pub radius: f64,
    /// Only states with `|b_n(1)/n - 1/2| < max_imbalance` enter.
    pub max_imbalance: f64,
    /// Bins are `[r·2^k, r·2^{k+1})`.
    pub bins: usize,
    /// Bins with fewer contributing replicas are skipped.
    pub min_replicas: usize,
}

impl Default for DriftOptions {
    fn default() -> Self {
        Self { n_lo: 1000, n_hi: 10_000, radius: 50.0, max_imbalance: 0.05, bins: 6, min_replicas: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftBin {
    pub lo: f64,
    pub hi: f64,
    /// Mean over replicas of each replica's average corrected drift.
    pub corrected: Option<MeanSe>,
    pub replicas: usize,
    pub skipped: bool,
    /// `corrected ≤ 3 s.e.`
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub in_regime: bool,
    pub bins: Vec<DriftBin>,
    pub pass: bool,
}

fn f(s2: f64) -> f64 {
    (0.5 * s2.ln()).sqrt()
}

/// For each visited state in the window, the exact conditional drift
/// `E[f(S_{n+1}) - f(S_n) | F_n]` from the step law, minus `a/(2n f(S_n))`,
/// averaged per replica and binned by `‖S_n‖`. Requires `d = 2`; `p ≥ 5/8`
/// is reported out of regime.
pub fn lyapunov_drift_probe(ens: &ReplicaEnsemble, opts: &DriftOptions) -> Result<DriftReport> {
    let params = &ens.params;
    if params.d != 2 {
        return Err(Error::InvalidParam("drift probe is for d = 2".into()));
    }
    let in_regime = params.p.cmp_rational(&BigRational::new(5.into(), 8.into())).is_lt();
    let a = memory_exponent(2, &params.p.value());
    let nb = opts.bins;
    let per_replica = ens.map(|w| {
        let mut sums = vec![0.0; nb];
        let mut counts = vec![0u64; nb];
        w.run_to(opts.n_lo);
        while w.n() < opts.n_hi {
            let n = w.n();
            let s2 = w.state().norm2_f64();
            let norm = s2.sqrt();
            let imbalance = (w.state().axis_counts[0] as f64 / n as f64 - 0.5).abs();
            if norm > opts.radius && imbalance < opts.max_imbalance {
                let k = (norm / opts.radius).log2().floor() as usize;
                if k < nb {
                    let pos = [w.position()[0], w.position()[1]];
                    let f0 = f(s2);
                    let probs = w.current_probs();
                    let mut drift = 0.0;
                    for (dir, pr) in probs.iter().enumerate() {
                        let mut q = pos;
                        q[dir / 2] += if dir % 2 == 0 { 1 } else { -1 };
                        let q2 = (q[0] * q[0] + q[1] * q[1]) as f64;
                        drift += pr * (f(q2) - f0);
                    }
                    sums[k] += drift - a / (2.0 * n as f64 * f0);
                    counts[k] += 1;
                }
            }
            w.step();
        }
        (sums, counts)
    })?;
    let mut bins = Vec::with_capacity(nb);
    for k in 0..nb {
        let vals: Vec<f64> =
            per_replica.iter().filter(|r| r.1[k] > 0).map(|r| r.0[k] / r.1[k] as f64).collect();
        let lo = opts.radius * 2f64.powi(k as i32);
        let skipped = vals.len() < opts.min_replicas;
        let corrected = (!skipped).then(|| MeanSe::of(&vals));
        let pass = corrected.is_none_or(|m| m.mean <= 3.0 * m.se);
        bins.push(DriftBin { lo, hi: 2.0 * lo, corrected, replicas: vals.len(), skipped, pass });
    }
    let pass = in_regime && bins.iter().any(|b| !b.skipped) && bins.iter().all(|b| b.pass);
    Ok(DriftReport { in_regime, bins, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::WalkParams;

    #[test]
    fn zero_memory_supermartingale() {
        let ens = ReplicaEnsemble::new(WalkParams::rational(2, 1, 4).unwrap(), 200, 5, vec![1]).unwrap();
        let opts = DriftOptions { n_lo: 200, n_hi: 3000, radius: 10.0, ..DriftOptions::default() };
        let rep = lyapunov_drift_probe(&ens, &opts).unwrap();
        assert!(rep.in_regime && rep.pass, "{rep:?}");
    }

    #[test]
    fn p_one_out_of_regime() {
        let ens = ReplicaEnsemble::new(WalkParams::rational(2, 1, 1).unwrap(), 5, 5, vec![1]).unwrap();
        let opts = DriftOptions { n_lo: 100, n_hi: 200, radius: 10.0, min_replicas: 1, ..DriftOptions::default() };
        let rep = lyapunov_drift_probe(&ens, &opts).unwrap();
        assert!(!rep.in_regime && !rep.pass);
        let ens = ReplicaEnsemble::new(WalkParams::rational(3, 1, 2).unwrap(), 5, 5, vec![1]).unwrap();
        assert!(lyapunov_drift_probe(&ens, &opts).is_err());
    }
}
