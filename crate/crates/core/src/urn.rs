//! The 2d-colour urn behind the MERW and its continuous-time embedding.
//!
//! Each event draws a ball uniformly and adds one ball: the drawn direction
//! with probability `p`, otherwise one of the other `2d - 1` directions
//! uniformly. The skeleton uses substream 0 (two draws per event) and the
//! exponential clock uses substream 1, so a continuous run and a discrete run
//! with the same seed have the same jump chain.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::stats::{ks_two_sample, ks_two_sample_threshold, try_run_replicas};
use crate::walk::{memory_exponent, regime, select_direction, urn_weights, Regime, WalkParams};

#[derive(Clone, Debug)]
pub struct UrnProcess {
    d: usize,
    p: f64,
    counts: Vec<u64>,
    total: u64,
    tau: f64,
    skeleton: StreamRng,
    clock: StreamRng,
    add: Vec<f64>,
}

impl UrnProcess {
    /// Urn holding the single ball `initial_step` (`N_1 = e_1` by default).
    pub fn new(params: &WalkParams, seed: u64, stream_id: u64) -> Result<Self> {
        params.validate()?;
        let d = params.d;
        let mut counts = vec![0; 2 * d];
        counts[params.initial_step.direction()] = 1;
        Ok(Self {
            d,
            p: params.p.value(),
            counts,
            total: 1,
            tau: 0.0,
            skeleton: StreamRng::new(seed, stream_id, 0),
            clock: StreamRng::new(seed, stream_id, 1),
            add: vec![0.0; 2 * d],
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Jump time of the current composition (0 until a timed event).
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `S = Σ (N(i) - N(-i)) e_i`.
    pub fn walk_position(&self) -> Vec<i64> {
        (0..self.d).map(|i| self.counts[2 * i] as i64 - self.counts[2 * i + 1] as i64).collect()
    }

    /// One draw-and-add step; returns `(drawn, added)` directions.
    #[inline]
    pub fn event(&mut self) -> (usize, usize) {
        let mut r = self.skeleton.below(self.total);
        let mut drawn = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            if r < c {
                drawn = k;
                break;
            }
            r -= c;
        }
        let other = (1.0 - self.p) / (2 * self.d - 1) as f64;
        for (k, a) in self.add.iter_mut().enumerate() {
            *a = if k == drawn { self.p } else { other };
        }
        let u = self.skeleton.uniform();
        let added = select_direction(&self.add, &u);
        self.counts[added] += 1;
        self.total += 1;
        (drawn, added)
    }

    /// Waits `Exp(k)` with `k` balls present, then performs `event`.
    #[inline]
    pub fn timed_event(&mut self) -> (usize, usize) {
        self.tau += self.clock.exp1() / self.total as f64;
        self.event()
    }
}

/// Discrete urn compositions `N_1, ..., N_{n_events + 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnPath {
    pub params: WalkParams,
    pub seed: u64,
    pub stream_id: u64,
    /// Flattened `(n_events + 1) × 2d`.
    pub counts: Vec<u64>,
}

impl UrnPath {
    pub fn composition(&self, k: usize) -> &[u64] {
        let w = 2 * self.params.d;
        &self.counts[k * w..(k + 1) * w]
    }

    pub fn len(&self) -> usize {
        self.counts.len() / (2 * self.params.d)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn simulate_urn_discrete(params: &WalkParams, n_events: u64, seed: u64, stream_id: u64) -> Result<UrnPath> {
    let mut urn = UrnProcess::new(params, seed, stream_id)?;
    let mut counts = Vec::with_capacity((n_events as usize + 1) * 2 * params.d);
    counts.extend_from_slice(urn.counts());
    for _ in 0..n_events {
        urn.event();
        counts.extend_from_slice(urn.counts());
    }
    Ok(UrnPath { params: params.clone(), seed, stream_id, counts })
}

/// Continuous-time run: `jump_times[k] = τ_k` and composition `U_{τ_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnRun {
    pub params: WalkParams,
    pub seed: u64,
    pub stream_id: u64,
    pub jump_times: Vec<f64>,
    /// Flattened `(K + 1) × 2d`.
    pub compositions: Vec<u64>,
}

impl UrnRun {
    pub fn horizon(&self) -> u64 {
        self.jump_times.len() as u64 - 1
    }

    pub fn composition(&self, k: usize) -> &[u64] {
        let w = 2 * self.params.d;
        &self.compositions[k * w..(k + 1) * w]
    }

    /// Ball count `k + 1`, one ball per jump, increasing times.
    pub fn check(&self) -> Result<()> {
        for k in 0..self.jump_times.len() {
            let total: u64 = self.composition(k).iter().sum();
            if total != k as u64 + 1 {
                return Err(Error::InconsistentState(format!("{total} balls at τ_{k}")));
            }
            if k > 0 {
                if self.jump_times[k] <= self.jump_times[k - 1] {
                    return Err(Error::InconsistentState(format!("τ_{k} not increasing")));
                }
                let changed: u64 = self
                    .composition(k)
                    .iter()
                    .zip(self.composition(k - 1))
                    .map(|(a, b)| a - b)
                    .sum();
                if changed != 1 {
                    return Err(Error::InconsistentState(format!("jump {k} adds {changed} balls")));
                }
            }
        }
        Ok(())
    }

    /// CSV `k,tau_k,u_plus_1,u_minus_1,...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "k,tau_k")?;
        for i in 1..=self.params.d {
            write!(w, ",u_plus_{i},u_minus_{i}")?;
        }
        writeln!(w)?;
        for (k, tau) in self.jump_times.iter().enumerate() {
            write!(w, "{k},{tau:.17e}")?;
            for c in self.composition(k) {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn simulate_urn_continuous(params: &WalkParams, n_events: u64, seed: u64, stream_id: u64) -> Result<UrnRun> {
    if n_events == 0 {
        return Err(Error::InvalidParam("need at least one event".into()));
    }
    let mut urn = UrnProcess::new(params, seed, stream_id)?;
    let mut jump_times = Vec::with_capacity(n_events as usize + 1);
    let mut compositions = Vec::with_capacity((n_events as usize + 1) * 2 * params.d);
    jump_times.push(0.0);
    compositions.extend_from_slice(urn.counts());
    for _ in 0..n_events {
        urn.timed_event();
        jump_times.push(urn.tau());
        compositions.extend_from_slice(urn.counts());
    }
    Ok(UrnRun { params: params.clone(), seed, stream_id, jump_times, compositions })
}

/// Plug-in estimates at one horizon `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: u64,
    pub xi_hat: f64,
    pub w_hat: Vec<f64>,
    pub y_hat: Vec<f64>,
    /// `|Ŷ ξ̂^a - Ŵ|`
    pub consistency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimates {
    pub horizon: u64,
    pub xi_hat: f64,
    pub w_hat: Vec<f64>,
    pub w_sum: f64,
    pub y_hat: Vec<f64>,
    /// Estimates at `K/4`, `K/2`, `K`.
    pub checkpoints: Vec<Checkpoint>,
}

impl LimitEstimates {
    /// Largest change of `ŵ` between consecutive checkpoints.
    pub fn truncation_delta(&self) -> f64 {
        self.checkpoints
            .windows(2)
            .map(|c| (c[1].w_hat.iter().sum::<f64>() - c[0].w_hat.iter().sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }
}

/// `K e^{-τ_K}`.
pub fn xi_estimate(k: u64, tau: f64) -> f64 {
    k as f64 * (-tau).exp()
}

fn checkpoint(counts: &[u64], k: u64, tau: f64, a: f64) -> Checkpoint {
    let d = counts.len() / 2;
    let xi_hat = xi_estimate(k, tau);
    let s: Vec<f64> = (0..d).map(|i| counts[2 * i] as f64 - counts[2 * i + 1] as f64).collect();
    let scale = (-a * tau).exp();
    let w_hat: Vec<f64> = s.iter().map(|x| x * scale).collect();
    let ynorm = ((k + 1) as f64).powf(-a);
    let y_hat: Vec<f64> = s.iter().map(|x| x * ynorm).collect();
    let xa = xi_hat.powf(a);
    let consistency = y_hat.iter().zip(&w_hat).map(|(y, w)| (y * xa - w).powi(2)).sum::<f64>().sqrt();
    Checkpoint { k, xi_hat, w_hat, y_hat, consistency }
}

fn require_superdiffusive(params: &WalkParams) -> Result<f64> {
    if regime(params) != Regime::Superdiffusive {
        return Err(Error::Regime(format!(
            "W, Y and w need p > p_d = {}",
            crate::walk::critical_p(params.d)
        )));
    }
    Ok(memory_exponent(params.d, &params.p.value()))
}

fn checkpoint_horizons(k: u64) -> [u64; 3] {
    [(k / 4).max(1), (k / 2).max(1), k]
}

fn assemble(checkpoints: Vec<Checkpoint>) -> LimitEstimates {
    let last = checkpoints.last().expect("three checkpoints").clone();
    LimitEstimates {
        horizon: last.k,
        xi_hat: last.xi_hat,
        w_sum: last.w_hat.iter().sum(),
        w_hat: last.w_hat,
        y_hat: last.y_hat,
        checkpoints,
    }
}

/// `ξ̂ = K e^{-τ_K}`; valid for every `p`.
pub fn estimate_xi(run: &UrnRun) -> f64 {
    xi_estimate(run.horizon(), *run.jump_times.last().expect("non-empty run"))
}

/// Estimates at the run horizon `K` with checkpoints `K/4`, `K/2`, `K`.
pub fn estimate_limits(run: &UrnRun) -> Result<LimitEstimates> {
    let a = require_superdiffusive(&run.params)?;
    let cps = checkpoint_horizons(run.horizon())
        .iter()
        .map(|&k| checkpoint(run.composition(k as usize), k, run.jump_times[k as usize], a))
        .collect();
    Ok(assemble(cps))
}

/// Same estimates as `estimate_limits(simulate_urn_continuous(..))` without
/// storing the path.
pub fn run_limits(params: &WalkParams, horizon: u64, seed: u64, stream_id: u64) -> Result<LimitEstimates> {
    let a = require_superdiffusive(params)?;
    if horizon == 0 {
        return Err(Error::InvalidParam("need at least one event".into()));
    }
    let mut urn = UrnProcess::new(params, seed, stream_id)?;
    let mut cps = Vec::with_capacity(3);
    for k in checkpoint_horizons(horizon) {
        while urn.total() < k + 1 {
            urn.timed_event();
        }
        cps.push(checkpoint(urn.counts(), k, urn.tau(), a));
    }
    Ok(assemble(cps))
}

/// `ξ̂` after `horizon` events, streamed.
pub fn run_xi(params: &WalkParams, horizon: u64, seed: u64, stream_id: u64) -> Result<f64> {
    let mut urn = UrnProcess::new(params, seed, stream_id)?;
    while urn.total() < horizon + 1 {
        urn.timed_event();
    }
    Ok(xi_estimate(horizon, urn.tau()))
}

/// Independent replicas of `ŵ` (replica `r` on stream `r`).
pub fn sample_w(params: &WalkParams, horizon: u64, replicas: u64, seed: u64, workers: usize) -> Result<Vec<f64>> {
    require_superdiffusive(params)?;
    try_run_replicas(replicas, workers, |r| run_limits(params, horizon, seed, r).map(|e| e.w_sum))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub distance: f64,
    /// Two-sample KS critical value at level 0.001.
    pub threshold: f64,
    pub size: usize,
}

/// Resamples `e^{-aτ}(w + (α ? w' : -w'))` with `τ ~ Exp(1)`,
/// `α ~ Bernoulli((dp + d - 1)/(2d - 1))` and `w, w'` bootstrap draws, and
/// returns its two-sample KS distance to `sample`.
pub fn fixed_point_check(sample: &[f64], params: &WalkParams, seed: u64) -> Result<FixedPointResult> {
    if sample.is_empty() {
        return Err(Error::Empty("fixed-point check needs a sample".into()));
    }
    let a = require_superdiffusive(params)?;
    let (big_a, _) = urn_weights(params.d, &params.p.value());
    let mut rng = StreamRng::new(seed, 0, 0);
    let n = sample.len() as u64;
    let rhs: Vec<f64> = (0..n)
        .map(|_| {
            let tau = rng.exp1();
            let alpha = rng.uniform() < big_a;
            let w1 = sample[rng.below(n) as usize];
            let w2 = sample[rng.below(n) as usize];
            (-a * tau).exp() * (w1 + if alpha { w2 } else { -w2 })
        })
        .collect();
    Ok(FixedPointResult {
        distance: ks_two_sample(sample, &rhs),
        threshold: ks_two_sample_threshold(sample.len(), rhs.len(), 1e-3),
        size: sample.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, n: i64, m: i64) -> WalkParams {
        WalkParams::rational(d, n, m).unwrap()
    }

    #[test]
    fn p_one_urn_is_monochrome() {
        let path = simulate_urn_discrete(&params(3, 1, 1), 50, 1, 0).unwrap();
        for k in 0..path.len() {
            assert_eq!(path.composition(k)[0], k as u64 + 1);
            assert!(path.composition(k)[1..].iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn skeleton_matches_discrete() {
        let pp = params(2, 4, 5);
        let disc = simulate_urn_discrete(&pp, 2000, 12, 3).unwrap();
        let cont = simulate_urn_continuous(&pp, 2000, 12, 3).unwrap();
        assert_eq!(disc.counts, cont.compositions);
        cont.check().unwrap();
    }

    #[test]
    fn one_event_law_d1() {
        let pp = params(1, 3, 10);
        let mut same = 0;
        let runs = 20_000;
        for s in 0..runs {
            let path = simulate_urn_discrete(&pp, 1, 5, s).unwrap();
            match path.composition(1) {
                [2, 0] => same += 1,
                [1, 1] => {}
                other => panic!("impossible composition {other:?}"),
            }
        }
        let f = same as f64 / runs as f64;
        let se = (0.3f64 * 0.7 / runs as f64).sqrt();
        assert!((f - 0.3).abs() < 4.0 * se, "{f}");
    }

    #[test]
    fn p_one_limits_coincide() {
        let run = simulate_urn_continuous(&params(1, 1, 1), 5000, 4, 0).unwrap();
        let est = estimate_limits(&run).unwrap();
        // Ŵ = (K + 1) e^{-τ_K} versus ξ̂ = K e^{-τ_K}.
        let ratio = est.w_hat[0] / est.xi_hat;
        assert!((ratio - 5001.0 / 5000.0).abs() < 1e-12);
        assert_eq!(est.w_hat[0], est.w_sum);
    }

    #[test]
    fn streamed_limits_match_stored_run() {
        let pp = params(2, 9, 10);
        let run = simulate_urn_continuous(&pp, 4000, 6, 2).unwrap();
        let a = estimate_limits(&run).unwrap();
        let b = run_limits(&pp, 4000, 6, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(estimate_xi(&run), run_xi(&pp, 4000, 6, 2).unwrap());
        assert_eq!(a.checkpoints.iter().map(|c| c.k).collect::<Vec<_>>(), vec![1000, 2000, 4000]);
    }

    #[test]
    fn regime_errors() {
        let run = simulate_urn_continuous(&params(2, 1, 2), 100, 1, 0).unwrap();
        assert!(matches!(estimate_limits(&run), Err(Error::Regime(_))));
        assert!(estimate_xi(&run) > 0.0);
        assert!(sample_w(&params(1, 3, 4), 10, 2, 1, 1).is_err());
        assert!(fixed_point_check(&[], &params(1, 9, 10), 1).is_err());
    }

    #[test]
    fn fixed_point_of_zero_sample() {
        let r = fixed_point_check(&[0.0; 100], &params(1, 9, 10), 1).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn csv_header() {
        let run = simulate_urn_continuous(&params(2, 9, 10), 3, 1, 0).unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,tau_k,u_plus_1,u_minus_1,u_plus_2,u_minus_2\n0,0"));
        assert_eq!(text.lines().count(), 5);
    }
}
