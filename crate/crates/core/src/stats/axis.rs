//! Axis occupation errors `η_n(i) = b_n(i)/n - 1/d`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::ensemble::ReplicaEnsemble;
use super::output::StatCurve;
use super::reduce::{column, ls_slope, MeanSe};
use crate::error::{Error, Result};
use crate::walk::{regime, Regime, WalkParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisReport {
    pub checkpoints: Vec<u64>,
    /// `E|η_n(1)|`.
    pub mean_abs: Vec<MeanSe>,
    /// `E η_n(1)²` against the binomial oracle `(1/d)(1 - 1/d)/n` (only
    /// meaningful at `p = 1/(2d)`).
    pub second_moment: Vec<MeanSe>,
    /// `-slope` of `log E|η_n|` against `log n`.
    pub fitted_exponent: f64,
    pub predicted_exponent: f64,
    /// `Σ_i b_n(i) = n` held on every replica and checkpoint.
    pub sums_exact: bool,
}

impl AxisReport {
    pub fn curve(&self) -> StatCurve {
        let mut c = StatCurve::default();
        for (n, m) in self.checkpoints.iter().zip(&self.mean_abs) {
            c.push(*n, m.mean, m.se);
        }
        c
    }
}

/// Decay exponent of `E|η_n|`: `1/2` up to `p_d` (with a log factor at
/// `p_d`), `2d(1 - p)/(2d - 1)` above.
pub fn predicted_axis_exponent(params: &WalkParams) -> f64 {
    match regime(params) {
        Regime::Superdiffusive => {
            let d = params.d as f64;
            2.0 * d * (1.0 - params.p.value()) / (2.0 * d - 1.0)
        }
        _ => 0.5,
    }
}

pub fn axis_occupation_error(ens: &ReplicaEnsemble) -> Result<AxisReport> {
    let d = ens.params.d;
    if d < 2 || ens.params.p.cmp_rational(&BigRational::from_integer(1.into())).is_ge() {
        return Err(Error::InvalidParam("axis occupation needs d ≥ 2 and p < 1".into()));
    }
    let rows = ens.map_checkpoints(|w| {
        let s = w.state();
        let ok = s.axis_counts.iter().sum::<u64>() == s.n;
        (s.axis_counts[0] as f64 / s.n as f64 - 1.0 / d as f64, ok)
    })?;
    let sums_exact = rows.iter().flatten().all(|r| r.1);
    let mut mean_abs = Vec::new();
    let mut second_moment = Vec::new();
    for j in 0..ens.checkpoints.len() {
        let eta: Vec<f64> = column(&rows, j).iter().map(|r| r.0).collect();
        mean_abs.push(MeanSe::of(&eta.iter().map(|x| x.abs()).collect::<Vec<_>>()));
        second_moment.push(MeanSe::of(&eta.iter().map(|x| x * x).collect::<Vec<_>>()));
    }
    let xs: Vec<f64> = ens.checkpoints.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mean_abs.iter().map(|m| m.mean.ln()).collect();
    Ok(AxisReport {
        checkpoints: ens.checkpoints.clone(),
        fitted_exponent: -ls_slope(&xs, &ys),
        predicted_exponent: predicted_axis_exponent(&ens.params),
        mean_abs,
        second_moment,
        sums_exact,
    })
}

/// `Var b_n(1)/n` when axes after step 1 are i.i.d. uniform, with `S_1` on axis 1:
/// `(n - 1)(1/d)(1 - 1/d)/n²`, plus the squared bias of the first step.
pub fn uniform_axis_second_moment(d: usize, n: u64) -> f64 {
    let (df, nf) = (d as f64, n as f64);
    let mean = (1.0 + (nf - 1.0) / df) / nf - 1.0 / df;
    (nf - 1.0) * (1.0 / df) * (1.0 - 1.0 / df) / (nf * nf) + mean * mean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_oracle() {
        // p = 1/(2d): every direction is equally likely at every step.
        let params = WalkParams::rational(3, 1, 6).unwrap();
        let ens = ReplicaEnsemble::new(params, 3000, 4, vec![10, 100, 1000]).unwrap();
        let rep = axis_occupation_error(&ens).unwrap();
        assert!(rep.sums_exact);
        for (n, m) in rep.checkpoints.iter().zip(&rep.second_moment) {
            assert!(m.within(uniform_axis_second_moment(3, *n), 3.0, 0.0), "{n} {m:?}");
        }
        assert!((rep.fitted_exponent - 0.5).abs() < 0.1, "{}", rep.fitted_exponent);
    }

    #[test]
    fn rejects_d1() {
        let ens = ReplicaEnsemble::new(WalkParams::rational(1, 1, 2).unwrap(), 2, 1, vec![5]).unwrap();
        assert!(axis_occupation_error(&ens).is_err());
    }
}
