//! Streaming stepper and recorded trajectories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::law::{derw_probs_into, merw_probs_into, select_direction, LawConstants};
use super::params::WalkParams;
use super::state::{WalkState, MAX_STEPS};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

const CHECK_MASK: u64 = (1 << 16) - 1;

/// Steps one MERW or d-ERW (chosen by `params.q`) from `S_1 = initial_step`,
/// drawing one uniform per step from substream 0 of `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct Walker {
    params: WalkParams,
    law: LawConstants<f64>,
    state: WalkState,
    rng: StreamRng,
    probs: Vec<f64>,
}

impl Walker {
    pub fn new(params: &WalkParams, seed: u64, stream_id: u64) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: params.clone(),
            law: LawConstants::new(params),
            state: WalkState::initial(params.d, params.initial_step),
            rng: StreamRng::new(seed, stream_id, 0),
            probs: vec![0.0; 2 * params.d],
        })
    }

    pub fn params(&self) -> &WalkParams {
        &self.params
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn n(&self) -> u64 {
        self.state.n
    }

    /// Current position.
    pub fn position(&self) -> &[i64] {
        &self.state.position
    }

    /// Current step law (MERW or d-ERW).
    pub fn current_probs(&mut self) -> &[f64] {
        self.fill_probs();
        &self.probs
    }

    #[inline]
    fn fill_probs(&mut self) {
        if self.law.q_bias.is_some() {
            derw_probs_into(&self.state, &self.law, &mut self.probs);
        } else {
            merw_probs_into(&self.state, &self.law, &mut self.probs);
        }
    }

    /// Advances to `n + 1` and returns the direction index taken.
    #[inline]
    pub fn step(&mut self) -> usize {
        let u = self.rng.uniform();
        let dir = if self.law.q_bias.is_none() {
            self.merw_select(u)
        } else {
            self.fill_probs();
            select_direction(&self.probs, &u)
        };
        self.state.push(dir);
        if cfg!(debug_assertions) || self.state.n & CHECK_MASK == 0 {
            if let Err(e) = self.state.check() {
                panic!("walk invariant broken at n = {}: {e}", self.state.n);
            }
        }
        dir
    }

    /// `select_direction` fused with `merw_probs_into`: same operations in the
    /// same order, stopping at the first cell containing `u`.
    #[inline]
    fn merw_select(&mut self, u: f64) -> usize {
        let n = self.state.n as f64;
        let (a, base) = (self.law.a, self.law.base);
        let mut acc = 0.0;
        for (k, &c) in self.state.dir_counts.iter().enumerate() {
            acc += a * c as f64 / n + base;
            if u < acc {
                return k;
            }
        }
        self.fill_probs();
        select_direction(&self.probs, &u)
    }

    /// Steps until `n = target` (no-op if already there).
    pub fn run_to(&mut self, target: u64) {
        while self.state.n < target {
            self.step();
        }
    }
}

/// A realized path. `times` holds the recorded step indices: `n = 1`, every
/// multiple of `stride`, and `n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub params: WalkParams,
    pub seed: u64,
    pub stream_id: u64,
    pub n_max: u64,
    pub stride: u64,
    pub times: Vec<u64>,
    /// Flattened `times.len() × d` positions.
    pub positions: Vec<i64>,
    pub final_state: WalkState,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    params: WalkParams,
    seed: u64,
    stream_id: u64,
    n_max: u64,
    stride: u64,
    final_state: WalkState,
}

impl Trajectory {
    pub(crate) fn start(params: &WalkParams, seed: u64, stream_id: u64, n_max: u64, stride: u64) -> Self {
        Self {
            params: params.clone(),
            seed,
            stream_id,
            n_max,
            stride,
            times: Vec::new(),
            positions: Vec::new(),
            final_state: WalkState::initial(params.d, params.initial_step),
        }
    }

    #[inline]
    pub(crate) fn record_if_due(&mut self, state: &WalkState) {
        let n = state.n;
        if n == 1 || n.is_multiple_of(self.stride) || n == self.n_max {
            self.times.push(n);
            self.positions.extend_from_slice(&state.position);
        }
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn position(&self, k: usize) -> &[i64] {
        let d = self.d();
        &self.positions[k * d..(k + 1) * d]
    }

    /// Recorded `(n, position)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &[i64])> + '_ {
        self.times.iter().copied().zip(self.positions.chunks_exact(self.d()))
    }

    /// Consecutive records must be reachable: `|ΔS|_1 ≤ Δn` with matching
    /// parity, which for `stride = 1` means exactly one unit step.
    pub fn check_steps(&self) -> Result<()> {
        for k in 1..self.len() {
            let dn = self.times[k] - self.times[k - 1];
            let l1: u64 = self
                .position(k)
                .iter()
                .zip(self.position(k - 1))
                .map(|(a, b)| (a - b).unsigned_abs())
                .sum();
            if l1 > dn || !(dn - l1).is_multiple_of(2) {
                return Err(Error::InconsistentState(format!(
                    "records at n = {} and n = {} are not {dn} unit steps apart",
                    self.times[k - 1],
                    self.times[k]
                )));
            }
        }
        Ok(())
    }

    /// Direction index of every step `n -> n + 1`; needs `stride = 1`.
    pub fn directions(&self) -> Result<Vec<usize>> {
        if self.len() as u64 != self.n_max {
            return Err(Error::InvalidParam("directions need a full (stride 1) path".into()));
        }
        let mut out = Vec::with_capacity(self.len().saturating_sub(1));
        for k in 1..self.len() {
            let (cur, prev) = (self.position(k), self.position(k - 1));
            let axis = (0..self.d())
                .find(|&i| cur[i] != prev[i])
                .ok_or_else(|| Error::InconsistentState(format!("no move at step {k}")))?;
            out.push(2 * axis + usize::from(cur[axis] < prev[axis]));
        }
        Ok(out)
    }

    /// Rebuilds every state `n = 1..=n_max` from a full path.
    pub fn replay(&self) -> Result<Vec<WalkState>> {
        let dirs = self.directions()?;
        let mut state = WalkState::initial(self.d(), self.params.initial_step);
        let mut out = Vec::with_capacity(dirs.len() + 1);
        if state.position != self.position(0) {
            return Err(Error::InconsistentState("first record is not the initial step".into()));
        }
        out.push(state.clone());
        for dir in dirs {
            state.push(dir);
            out.push(state.clone());
        }
        Ok(out)
    }

    /// CSV `n,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.d()).map(|i| format!("x{i}")).collect();
        writeln!(w, "n,{}", header.join(","))?;
        for (n, x) in self.iter() {
            write!(w, "{n}")?;
            for v in x {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// JSON sidecar `{params, seed, stream_id, n_max, stride, final_state}`.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::to_value(Sidecar {
            params: self.params.clone(),
            seed: self.seed,
            stream_id: self.stream_id,
            n_max: self.n_max,
            stride: self.stride,
            final_state: self.final_state.clone(),
        })
        .expect("sidecar serializes")
    }

    /// Inverse of `write_csv` + `sidecar_json`.
    pub fn from_csv(csv: &str, sidecar: &serde_json::Value) -> Result<Self> {
        let meta: Sidecar = serde_json::from_value(sidecar.clone())
            .map_err(|e| Error::InvalidParam(format!("bad sidecar: {e}")))?;
        let d = meta.params.d;
        let mut times = Vec::new();
        let mut positions = Vec::new();
        for (row, line) in csv.lines().enumerate().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d + 1 {
                return Err(Error::InvalidParam(format!("row {row}: expected {} fields", d + 1)));
            }
            let parse = |s: &str| {
                s.parse::<i64>()
                    .map_err(|_| Error::InvalidParam(format!("row {row}: bad integer {s:?}")))
            };
            times.push(parse(fields[0])? as u64);
            for f in &fields[1..] {
                positions.push(parse(f)?);
            }
        }
        Ok(Self {
            params: meta.params,
            seed: meta.seed,
            stream_id: meta.stream_id,
            n_max: meta.n_max,
            stride: meta.stride,
            times,
            positions,
            final_state: meta.final_state,
        })
    }
}

/// Runs `n_max` steps (MERW, or d-ERW when `params.q` is set) and records
/// positions at `n = 1`, multiples of `stride`, and `n_max`.
pub fn simulate(
    params: &WalkParams,
    n_max: u64,
    seed: u64,
    stream_id: u64,
    stride: u64,
) -> Result<Trajectory> {
    if n_max == 0 || n_max > MAX_STEPS {
        return Err(Error::InvalidParam(format!("n_max = {n_max} outside [1, 2^62]")));
    }
    if stride == 0 {
        return Err(Error::InvalidParam("stride must be positive".into()));
    }
    let mut walker = Walker::new(params, seed, stream_id)?;
    let mut traj = Trajectory::start(params, seed, stream_id, n_max, stride);
    traj.record_if_due(walker.state());
    while walker.n() < n_max {
        walker.step();
        traj.record_if_due(walker.state());
    }
    traj.final_state = walker.state().clone();
    Ok(traj)
}
