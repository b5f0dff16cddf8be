//! Pathwise finite-n checks of almost-sure statements: LIL ratios, the
//! log-norm exponent, escape rates and directions.

use serde::{Deserialize, Serialize};

use super::ensemble::ReplicaEnsemble;
use super::output::StatCurve;
use super::reduce::median;
use crate::error::{Error, Result};
use crate::walk::{memory_exponent, regime, Regime, Walker};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilResult {
    pub running_max: f64,
    pub final_ratio: f64,
    /// limsup target: `1/(1 - 2a)` below `p_d`, `1` at `p_d`, none above.
    pub target: Option<f64>,
    /// Whether the triple-log floor of 1 was active at `n_max`.
    pub floor_active: bool,
}

/// Start of the LIL normalizers.
pub const LIL_START: u64 = 16;

/// `‖S_n‖²/(2n log log n)` (`p < p_d`) or `‖S_n‖²/(2n log n · L(n))` (`p = p_d`),
/// `L(n) = max(log log log max(n, 16), 1)`, running over `16 ≤ n ≤ n_max`.
/// Above `p_d` the diffusive normalizer is used and `target` is `None`.
pub fn lil_ratio(walker: &mut Walker, n_max: u64) -> LilResult {
    let reg = regime(walker.params());
    let a = memory_exponent(walker.params().d, &walker.params().p.value());
    let norm = |n: f64| match reg {
        Regime::Critical => 2.0 * n * n.ln() * n.max(16.0).ln().ln().ln().max(1.0),
        _ => 2.0 * n * n.ln().ln(),
    };
    walker.run_to(LIL_START - 1);
    let mut running_max: f64 = 0.0;
    let mut last = 0.0;
    while walker.n() < n_max {
        walker.step();
        let n = walker.n() as f64;
        last = walker.state().norm2_f64() / norm(n);
        running_max = running_max.max(last);
    }
    let nf = n_max as f64;
    LilResult {
        running_max,
        final_ratio: last,
        target: match reg {
            Regime::Diffusive => Some(1.0 / (1.0 - 2.0 * a)),
            Regime::Critical => Some(1.0),
            Regime::Superdiffusive => None,
        },
        floor_active: reg == Regime::Critical && nf.max(16.0).ln().ln().ln() < 1.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilBand {
    pub results: Vec<LilResult>,
    /// Fraction of replicas with running max `≤ 3 × target`.
    pub fraction_within: f64,
    pub pass: bool,
}

/// Band check: running max `≤ 3 ×` target on at least 95% of replicas.
pub fn lil_band(ens: &ReplicaEnsemble) -> Result<LilBand> {
    let n_max = ens.n_max();
    let results = ens.map(|w| lil_ratio(w, n_max))?;
    let Some(target) = results[0].target else {
        return Err(Error::Regime("LIL normalizers apply for p ≤ p_d".into()));
    };
    let within = results.iter().filter(|r| r.running_max <= 3.0 * target).count();
    let fraction_within = within as f64 / results.len() as f64;
    Ok(LilBand { results, fraction_within, pass: fraction_within >= 0.95 })
}

/// `log‖S_n‖²/log n` at each checkpoint (`n ≥ 2`; `NaN` when `S_n = 0`).
pub fn log_norm_exponent(walker: &mut Walker, checkpoints: &[u64]) -> Vec<f64> {
    checkpoints
        .iter()
        .map(|&c| {
            walker.run_to(c);
            let s2 = walker.state().norm2_f64();
            if s2 == 0.0 || c < 2 {
                f64::NAN
            } else {
                s2.ln() / (c as f64).ln()
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub checkpoints: Vec<u64>,
    pub medians: Vec<f64>,
    /// Fraction of replicas with the last value in `[0.8, 1.1]`.
    pub fraction_in_band: f64,
    pub values_at_end: Vec<f64>,
}

impl ExponentReport {
    pub fn curve(&self) -> StatCurve {
        let mut c = StatCurve::default();
        for (n, m) in self.checkpoints.iter().zip(&self.medians) {
            c.push(*n, *m, 0.0);
        }
        c
    }
}

pub fn log_norm_exponent_ensemble(ens: &ReplicaEnsemble) -> Result<ExponentReport> {
    let rows = ens.map(|w| log_norm_exponent(w, &ens.checkpoints))?;
    let medians = (0..ens.checkpoints.len())
        .map(|j| median(&rows.iter().map(|r| r[j]).filter(|x| x.is_finite()).collect::<Vec<_>>()))
        .collect();
    let values_at_end: Vec<f64> = rows.iter().map(|r| *r.last().expect("checkpoints")).collect();
    let fraction_in_band =
        values_at_end.iter().filter(|x| (0.8..=1.1).contains(*x)).count() as f64 / values_at_end.len() as f64;
    Ok(ExponentReport { checkpoints: ens.checkpoints.clone(), medians, fraction_in_band, values_at_end })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeResult {
    pub nu: f64,
    /// `#{2 ≤ n ≤ n_max : ‖S_n‖ ≤ n^ν}` (`n = 1` always has `‖S_1‖ = 1^ν`).
    pub violations: u64,
    pub last_violation: Option<u64>,
    /// `#{n ∈ [n_max/10, n_max] : ‖S_n‖ < √n (log n)^{-3}}`.
    pub sqrt_log_violations: u64,
}

/// Streams to `n_max`, counting `‖S_n‖ ≤ n^ν` and the `√n (log n)^{-3}` floor.
pub fn rate_of_escape_check(walker: &mut Walker, nu: f64, n_max: u64) -> EscapeResult {
    let mut violations = 0;
    let mut last_violation = None;
    let mut sqrt_log_violations = 0;
    let tail_start = n_max / 10;
    loop {
        let n = walker.n();
        let nf = n as f64;
        let s2 = walker.state().norm2_f64();
        if n >= 2 && s2 <= nf.powf(2.0 * nu) {
            violations += 1;
            last_violation = Some(n);
        }
        if n >= tail_start.max(2) && s2 < nf / nf.ln().powi(6) {
            sqrt_log_violations += 1;
        }
        if n >= n_max {
            break;
        }
        walker.step();
    }
    EscapeResult { nu, violations, last_violation, sqrt_log_violations }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionResult {
    /// Largest angle between `Ŝ_n` and `Ŝ_{n_max}` over `n ∈ [n_max/10, n_max]`
    /// (π when `S_n = 0` occurs there).
    pub oscillation: f64,
    /// Sign changes of each coordinate over `[1, n_max]`, zeros skipped.
    pub sign_changes: Vec<u64>,
    /// `Ŝ_n` at `n = 1` and every power of ten up to `n_max`.
    pub samples: Vec<(u64, Vec<f64>)>,
}

pub fn direction_series(walker: &mut Walker, n_max: u64) -> DirectionResult {
    let d = walker.params().d;
    let mut last_sign = vec![0i8; d];
    let mut sign_changes = vec![0u64; d];
    let mut samples = Vec::new();
    let mut next_sample = 1u64;
    let tail_start = (n_max / 10).max(1);
    let mut tail: Vec<Vec<f64>> = Vec::new();
    let mut zero_in_tail = false;
    // Keep at most ~4096 tail points; angles to the endpoint are evaluated at the end.
    let tail_stride = ((n_max - tail_start) / 4096).max(1);
    loop {
        let n = walker.n();
        let s = walker.position();
        for i in 0..d {
            let sg = s[i].signum() as i8;
            if sg != 0 {
                if last_sign[i] != 0 && sg != last_sign[i] {
                    sign_changes[i] += 1;
                }
                last_sign[i] = sg;
            }
        }
        let norm = walker.state().norm2_f64().sqrt();
        if n == next_sample {
            samples.push((n, s.iter().map(|&x| if norm > 0.0 { x as f64 / norm } else { 0.0 }).collect()));
            next_sample = next_sample.saturating_mul(10);
        }
        if n >= tail_start {
            if norm == 0.0 {
                zero_in_tail = true;
            } else if (n - tail_start).is_multiple_of(tail_stride) || n == n_max {
                tail.push(s.iter().map(|&x| x as f64 / norm).collect());
            }
        }
        if n >= n_max {
            break;
        }
        walker.step();
    }
    let oscillation = if zero_in_tail {
        std::f64::consts::PI
    } else {
        let end = tail.last().cloned().unwrap_or_default();
        tail.iter()
            .map(|u| u.iter().zip(&end).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0).acos())
            .fold(0.0, f64::max)
    };
    DirectionResult { oscillation, sign_changes, samples }
}
