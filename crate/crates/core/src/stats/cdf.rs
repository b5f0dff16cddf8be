//! Distance of the normalized one-dimensional walk to the standard normal.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::ensemble::ReplicaEnsemble;
use super::ks::{ks_one_sample, std_normal_cdf};
use super::output::StatCurve;
use super::reduce::column;
use crate::error::{Error, Result};
use crate::walk::{Prob, WalkParams};

/// `√(3 - 4p) S_n/√n` for `p < 3/4`, `S_n/√(n log n)` at `p = 3/4`.
pub fn normalizer(p: &Prob, n: u64) -> Result<f64> {
    let nf = n as f64;
    match p.cmp_rational(&BigRational::new(3.into(), 4.into())) {
        std::cmp::Ordering::Less => Ok((3.0 - 4.0 * p.value()).sqrt() / nf.sqrt()),
        std::cmp::Ordering::Equal if n >= 2 => Ok(1.0 / (nf * nf.ln()).sqrt()),
        std::cmp::Ordering::Equal => Err(Error::Domain("n log n vanishes at n = 1".into())),
        std::cmp::Ordering::Greater => Err(Error::Regime(format!("normal limit needs p ≤ 3/4, got {p}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfReport {
    pub checkpoints: Vec<u64>,
    /// One-sample KS distance to `Φ` at each checkpoint.
    pub distance: Vec<f64>,
    pub replicas: u64,
}

impl CdfReport {
    pub fn curve(&self) -> StatCurve {
        let mut c = StatCurve::default();
        for (n, d) in self.checkpoints.iter().zip(&self.distance) {
            c.push(*n, *d, 0.0);
        }
        c
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.distance.windows(2).all(|w| w[1] < w[0])
    }
}

/// `sup_t |F_emp(t) - Φ(t)|` of the normalized `S_n` over the ensemble, at
/// every checkpoint.
pub fn normalized_cdf_distance(ens: &ReplicaEnsemble) -> Result<CdfReport> {
    let params: &WalkParams = &ens.params;
    if params.d != 1 {
        return Err(Error::Regime("normalized CDF distance is for d = 1".into()));
    }
    let scales = ens.checkpoints.iter().map(|&n| normalizer(&params.p, n)).collect::<Result<Vec<_>>>()?;
    let rows = ens.map_checkpoints(|w| w.position()[0])?;
    let distance = (0..ens.checkpoints.len())
        .map(|j| {
            let xs: Vec<f64> = column(&rows, j).iter().map(|&s| s as f64 * scales[j]).collect();
            ks_one_sample(&xs, std_normal_cdf)
        })
        .collect();
    Ok(CdfReport { checkpoints: ens.checkpoints.clone(), distance, replicas: ens.replicas })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_first_step() {
        let params = WalkParams::rational(1, 1, 2).unwrap();
        let ens = ReplicaEnsemble::new(params, 50, 1, vec![1]).unwrap();
        let rep = normalized_cdf_distance(&ens).unwrap();
        let t = 1.0f64;
        let f = std_normal_cdf(t);
        assert!((rep.distance[0] - f.max(1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn regime_errors() {
        let ens = ReplicaEnsemble::new(WalkParams::rational(1, 4, 5).unwrap(), 5, 1, vec![5]).unwrap();
        assert!(matches!(normalized_cdf_distance(&ens), Err(Error::Regime(_))));
        let ens = ReplicaEnsemble::new(WalkParams::rational(2, 1, 2).unwrap(), 5, 1, vec![5]).unwrap();
        assert!(normalized_cdf_distance(&ens).is_err());
        assert!(normalizer(&Prob::from_ratio(3, 4), 1).is_err());
    }

    #[test]
    fn diffusive_close_to_normal() {
        let ens = ReplicaEnsemble::new(WalkParams::rational(1, 1, 2).unwrap(), 4000, 2, vec![1600]).unwrap();
        let rep = normalized_cdf_distance(&ens).unwrap();
        // Atom size 0.4/√n, the S_1 = 1 shift 0.4/√n, plus sampling noise.
        assert!(rep.distance[0] < 0.05, "{}", rep.distance[0]);
    }
}
