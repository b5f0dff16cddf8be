//! Mean square displacement `E‖S_n‖²`.

use serde::{Deserialize, Serialize};

use super::ensemble::ReplicaEnsemble;
use super::output::StatCurve;
use super::reduce::{column, MeanSe};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::walk::{memory_exponent, WalkParams};

/// `m[n] = E‖S_n‖²` for `n = 0..=n_max` (`m[0] = 0`), from
/// `m_1 = 1`, `m_{n+1} = (1 + 2a/n) m_n + 1`.
pub fn msd_exact<T: Scalar>(params: &WalkParams, n_max: u64) -> Vec<T> {
    let a: T = memory_exponent(params.d, &params.p.to_scalar::<T>());
    let two_a = a.clone() + a;
    let mut m = Vec::with_capacity(n_max as usize + 1);
    m.push(T::zero());
    if n_max == 0 {
        return m;
    }
    m.push(T::one());
    for n in 1..n_max {
        let nn = T::from_u64(n);
        let next = (T::one() + two_a.clone() / nn) * m[n as usize].clone() + T::one();
        m.push(next);
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsdPoint {
    pub n: u64,
    pub exact: f64,
    pub empirical: MeanSe,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsdReport {
    pub points: Vec<MsdPoint>,
    /// Tolerance in standard errors.
    pub k_se: f64,
    pub pass: bool,
}

impl MsdReport {
    pub fn curve(&self) -> StatCurve {
        let mut c = StatCurve::default();
        for p in &self.points {
            c.push(p.n, p.empirical.mean, p.empirical.se);
        }
        c
    }
}

/// Sample mean of `‖S_n‖²` at the ensemble checkpoints against `msd_exact`,
/// within `4 s.e.` (plus `1e-9·exact` for zero-variance cases such as `p = 1`).
pub fn msd_empirical(ens: &ReplicaEnsemble) -> Result<MsdReport> {
    let rows = ens.map_checkpoints(|w| w.state().norm2_f64())?;
    let exact = msd_exact::<f64>(&ens.params, ens.n_max());
    let k_se = 4.0;
    let points: Vec<MsdPoint> = ens
        .checkpoints
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let e = MeanSe::of(&column(&rows, j));
            let x = exact[n as usize];
            MsdPoint { n, exact: x, empirical: e, pass: e.within(x, k_se, 1e-9 * x.abs()) }
        })
        .collect();
    let pass = points.iter().all(|p| p.pass);
    Ok(MsdReport { points, k_se, pass })
}
