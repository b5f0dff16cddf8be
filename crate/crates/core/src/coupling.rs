//! Shared-uniform couplings: an ERW pair driven by one uniform stream, and a
//! MERW bundled with any number of d-ERWs that share its axis choices.

use std::io::Write;

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::walk::{
    axis_weights_into, select_direction, LawConstants, Prob, SignedAxis, Trajectory, WalkParams,
    WalkState, MAX_STEPS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceRegime {
    ErwPair,
    MerwSandwichLowP,
    MerwSandwichHighP,
    DerwMonotone,
    NotCovered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub n: u64,
    /// One-based axis.
    pub axis: usize,
    /// Coordinates in the order of the claimed chain of inequalities.
    pub values: Vec<i64>,
}

/// At most this many violations are stored; `violation_count` has the total.
pub const MAX_STORED_VIOLATIONS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub regime: DominanceRegime,
    pub violations: Vec<Violation>,
    pub violation_count: u64,
    pub verified_range: [u64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DominanceReport {
    fn new(regime: DominanceRegime, n_max: u64) -> Self {
        Self { regime, violations: Vec::new(), violation_count: 0, verified_range: [1, n_max], note: None }
    }

    fn push(&mut self, v: Violation) {
        self.violation_count += 1;
        if self.violations.len() < MAX_STORED_VIOLATIONS {
            self.violations.push(v);
        }
    }

    pub fn is_clean(&self) -> bool {
        self.regime != DominanceRegime::NotCovered && self.violation_count == 0
    }
}

/// Sign of the next step on an axis where the walk sits at `x`: move away from
/// 0 iff `u < threshold`; at `x = 0` step `+1` iff `u < 1/2`.
#[inline]
fn signed_step(x: i64, u: f64, threshold: f64) -> i64 {
    if x == 0 {
        if u < 0.5 {
            1
        } else {
            -1
        }
    } else if u < threshold {
        x.signum()
    } else {
        -x.signum()
    }
}

/// ERW threshold `1/2 + (2p - 1)|x|/(2n)`.
#[inline]
fn erw_threshold(p: f64, x: i64, n: u64) -> f64 {
    0.5 + (2.0 * p - 1.0) * x.unsigned_abs() as f64 / (2.0 * n as f64)
}

fn check_horizon(n_max: u64) -> Result<()> {
    if n_max == 0 || n_max > MAX_STEPS {
        return Err(Error::InvalidParam(format!("n_max = {n_max} outside [1, 2^62]")));
    }
    Ok(())
}

/// Two one-dimensional ERWs with parameters `p1 ≤ p2` driven by the same
/// uniforms (stream 0 of `(seed, 0)`), and the check `|S_n| ≤ |S̃_n|`.
pub fn couple_erw_pair(
    p1: &Prob,
    p2: &Prob,
    n_max: u64,
    seed: u64,
) -> Result<(Trajectory, Trajectory, DominanceReport)> {
    check_horizon(n_max)?;
    let params1 = WalkParams::new(1, p1.clone())?;
    let params2 = WalkParams::new(1, p2.clone())?;
    if p1.to_rational() > p2.to_rational() {
        return Err(Error::InvalidParam(format!("need p1 ≤ p2, got {p1} > {p2}")));
    }
    let mut rng = StreamRng::new(seed, 0, 0);
    let mut t1 = Trajectory::start(&params1, seed, 0, n_max, 1);
    let mut t2 = Trajectory::start(&params2, seed, 0, n_max, 1);
    let mut s1 = WalkState::initial(1, SignedAxis::E1);
    let mut s2 = s1.clone();
    let mut report = DominanceReport::new(DominanceRegime::ErwPair, n_max);
    let (f1, f2) = (p1.value(), p2.value());
    t1.record_if_due(&s1);
    t2.record_if_due(&s2);
    loop {
        let (x1, x2) = (s1.position[0], s2.position[0]);
        if x1.abs() > x2.abs() {
            report.push(Violation { n: s1.n, axis: 1, values: vec![x1, x2] });
        }
        if s1.n == n_max {
            break;
        }
        let u = rng.uniform();
        let n = s1.n;
        s1.push(dir_of(signed_step(x1, u, erw_threshold(f1, x1, n))));
        s2.push(dir_of(signed_step(x2, u, erw_threshold(f2, x2, n))));
        t1.record_if_due(&s1);
        t2.record_if_due(&s2);
    }
    t1.final_state = s1;
    t2.final_state = s2;
    Ok((t1, t2, report))
}

#[inline]
fn dir_of(sign: i64) -> usize {
    usize::from(sign < 0)
}

/// One MERW and one d-ERW per `q`, all sharing the axis uniform `U_n`
/// (substream 0) and the per-axis sign uniforms `U_n^{(i)}` (substream `i`).
#[derive(Clone, Debug)]
pub struct CouplingBundle {
    pub d: usize,
    pub p: Prob,
    pub q_list: Vec<Prob>,
    pub n_max: u64,
    pub seed: u64,
    pub stream_id: u64,
    pub merw: Trajectory,
    pub derw: Vec<Trajectory>,
    /// Flattened `n_max × d` axis counts `b_n(i)`, `n = 1..=n_max`.
    pub b_counts: Vec<u64>,
}

/// Constants and per-step rule of the bundle coupling.
#[derive(Clone, Debug)]
pub struct CouplingRule {
    d: usize,
    law: LawConstants<f64>,
    q_bias: Vec<f64>,
    axis_w: Vec<f64>,
}

impl CouplingRule {
    pub fn new(d: usize, p: &Prob, q_list: &[Prob]) -> Result<Self> {
        let params = WalkParams::new(d, p.clone())?;
        for q in q_list {
            params.clone().with_q(q.clone())?;
        }
        Ok(Self {
            d,
            law: LawConstants::new(&params),
            q_bias: q_list.iter().map(|q| 2.0 * q.value() - 1.0).collect(),
            axis_w: vec![0.0; d],
        })
    }

    /// Directions taken by the MERW and each d-ERW from the given states with
    /// the axis uniform `u0` and sign uniforms `us[i]`. All states must share
    /// their axis counts.
    pub fn step_dirs(
        &mut self,
        merw: &WalkState,
        derw: &[WalkState],
        u0: f64,
        us: &[f64],
    ) -> (usize, Vec<usize>) {
        axis_weights_into(merw, &self.law, &mut self.axis_w);
        let axis = select_direction(&self.axis_w, &u0);
        let n = merw.n;
        let u = us[axis];
        let x = merw.position[axis];
        let thr = 0.5 + self.law.a * x.unsigned_abs() as f64 / (2.0 * n as f64 * self.axis_w[axis]);
        let merw_dir = 2 * axis + dir_of(signed_step(x, u, thr));
        let derw_dirs = derw
            .iter()
            .zip(&self.q_bias)
            .map(|(s, &qb)| {
                debug_assert_eq!(s.axis_counts, merw.axis_counts);
                let x = s.position[axis];
                let b = s.axis_counts[axis];
                let thr = if b == 0 { 0.5 } else { 0.5 + qb * x.unsigned_abs() as f64 / (2.0 * b as f64) };
                2 * axis + dir_of(signed_step(x, u, thr))
            })
            .collect();
        (merw_dir, derw_dirs)
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

pub fn couple_merw_derw(
    d: usize,
    p: &Prob,
    q_list: &[Prob],
    n_max: u64,
    seed: u64,
    stream_id: u64,
) -> Result<CouplingBundle> {
    check_horizon(n_max)?;
    let mut rule = CouplingRule::new(d, p, q_list)?;
    let merw_params = WalkParams::new(d, p.clone())?;
    let derw_params: Vec<WalkParams> = q_list
        .iter()
        .map(|q| merw_params.clone().with_q(q.clone()))
        .collect::<Result<_>>()?;

    let mut rngs: Vec<StreamRng> = (0..=d as u64).map(|k| StreamRng::new(seed, stream_id, k)).collect();
    let mut merw = WalkState::initial(d, SignedAxis::E1);
    let mut derw: Vec<WalkState> = vec![merw.clone(); q_list.len()];
    let mut t_merw = Trajectory::start(&merw_params, seed, stream_id, n_max, 1);
    let mut t_derw: Vec<Trajectory> = derw_params
        .iter()
        .map(|pp| Trajectory::start(pp, seed, stream_id, n_max, 1))
        .collect();
    let mut b_counts = Vec::with_capacity(n_max as usize * d);
    let mut us = vec![0.0; d];

    loop {
        t_merw.record_if_due(&merw);
        for (t, s) in t_derw.iter_mut().zip(&derw) {
            t.record_if_due(s);
        }
        b_counts.extend_from_slice(&merw.axis_counts);
        if merw.n == n_max {
            break;
        }
        let u0 = rngs[0].uniform();
        for (u, r) in us.iter_mut().zip(&mut rngs[1..]) {
            *u = r.uniform();
        }
        let (dir, dirs) = rule.step_dirs(&merw, &derw, u0, &us);
        merw.push(dir);
        for (s, k) in derw.iter_mut().zip(dirs) {
            s.push(k);
        }
    }
    t_merw.final_state = merw;
    for (t, s) in t_derw.iter_mut().zip(derw) {
        t.final_state = s;
    }
    Ok(CouplingBundle {
        d,
        p: p.clone(),
        q_list: q_list.to_vec(),
        n_max,
        seed,
        stream_id,
        merw: t_merw,
        derw: t_derw,
        b_counts,
    })
}

impl CouplingBundle {
    pub fn b_at(&self, n: u64) -> &[u64] {
        let k = (n - 1) as usize * self.d;
        &self.b_counts[k..k + self.d]
    }

    /// Every member's path has the axis counts recorded in `b_counts`.
    pub fn check_shared_axes(&self) -> Result<()> {
        for t in std::iter::once(&self.merw).chain(&self.derw) {
            let mut b = vec![0u64; self.d];
            b[0] = 1;
            if self.b_at(1) != b.as_slice() {
                return Err(Error::InconsistentState("b_1 differs".into()));
            }
            for (k, dir) in t.directions()?.into_iter().enumerate() {
                b[dir / 2] += 1;
                if self.b_at(k as u64 + 2) != b.as_slice() {
                    return Err(Error::InconsistentState(format!(
                        "member with q = {:?} has different axis counts at n = {}",
                        t.params.q.as_ref().map(|q| q.to_string()),
                        k + 2
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV `n,b1,...,bd`.
    pub fn write_b_counts_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.d).map(|i| format!("b{i}")).collect();
        writeln!(w, "n,{}", header.join(","))?;
        for (k, row) in self.b_counts.chunks_exact(self.d).enumerate() {
            write!(w, "{}", k + 1)?;
            for b in row {
                write!(w, ",{b}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `(2d - 1)p/(2dp - 2p + 1)`, the q boundary of the sandwich regimes.
pub fn sandwich_q(d: usize, p: &BigRational) -> BigRational {
    let dd = BigRational::from_integer((d as i64).into());
    let two = BigRational::from_integer(2.into());
    let num = (two.clone() * dd.clone() - BigRational::one()) * p;
    let den = two.clone() * dd * p - two * p + BigRational::one();
    num / den
}

/// Regime of `(p, q1, q2)`, classified in exact arithmetic.
pub fn classify(d: usize, p: &Prob, q1: &Prob, q2: &Prob) -> DominanceRegime {
    let p = p.to_rational();
    let (q1, q2) = (q1.to_rational(), q2.to_rational());
    let one = BigRational::one();
    let half = BigRational::new(1.into(), 2.into());
    let inv_2d = BigRational::new(1.into(), (2 * d as i64).into());
    let qs = sandwich_q(d, &p);
    if p < one {
        if p <= inv_2d && !q1.is_negative() && q1 <= qs && q2 == half {
            return DominanceRegime::MerwSandwichLowP;
        }
        if p >= inv_2d && q1 == half && q2 >= qs && q2 <= one {
            return DominanceRegime::MerwSandwichHighP;
        }
    }
    if q1 <= q2 {
        DominanceRegime::DerwMonotone
    } else {
        DominanceRegime::NotCovered
    }
}

/// Checks the dominance chain claimed for the first two d-ERWs of the bundle:
/// `|S̃^{q1}(i)| ≤ |S(i)| ≤ |S̃^{q2}(i)|` in the sandwich regimes,
/// `|S̃^{q1}(i)| ≤ |S̃^{q2}(i)|` otherwise when `q1 ≤ q2`.
pub fn verify_dominance(bundle: &CouplingBundle) -> DominanceReport {
    verify_dominance_pair(bundle, 0, 1)
}

pub fn verify_dominance_pair(bundle: &CouplingBundle, i1: usize, i2: usize) -> DominanceReport {
    let (Some(q1), Some(q2)) = (bundle.q_list.get(i1), bundle.q_list.get(i2)) else {
        let mut r = DominanceReport::new(DominanceRegime::NotCovered, bundle.n_max);
        r.note = Some("outside the supported regimes: need two d-ERW members".into());
        return r;
    };
    let regime = classify(bundle.d, &bundle.p, q1, q2);
    let mut report = DominanceReport::new(regime, bundle.n_max);
    let (lo, hi) = (&bundle.derw[i1], &bundle.derw[i2]);
    match regime {
        DominanceRegime::NotCovered => {
            report.note = Some("outside the supported regimes: configuration outside all regimes".into());
        }
        DominanceRegime::MerwSandwichLowP | DominanceRegime::MerwSandwichHighP => {
            for (k, n) in bundle.merw.times.iter().enumerate() {
                let (a, m, b) = (lo.position(k), bundle.merw.position(k), hi.position(k));
                for i in 0..bundle.d {
                    if a[i].abs() > m[i].abs() || m[i].abs() > b[i].abs() {
                        report.push(Violation { n: *n, axis: i + 1, values: vec![a[i], m[i], b[i]] });
                    }
                }
            }
        }
        DominanceRegime::DerwMonotone | DominanceRegime::ErwPair => {
            for (k, n) in lo.times.iter().enumerate() {
                let (a, b) = (lo.position(k), hi.position(k));
                for i in 0..bundle.d {
                    if a[i].abs() > b[i].abs() {
                        report.push(Violation { n: *n, axis: i + 1, values: vec![a[i], b[i]] });
                    }
                }
            }
        }
    }
    report
}

/// Per-axis walks of the `q_index`-th d-ERW: for axis `i`, the coordinate
/// `S̃(i)` recorded after each of its `b(i)` moves.
pub fn decompose_derw(bundle: &CouplingBundle, q_index: usize) -> Result<Vec<Vec<i64>>> {
    let t = bundle
        .derw
        .get(q_index)
        .ok_or_else(|| Error::InvalidParam(format!("no d-ERW member {q_index}")))?;
    let mut out = vec![Vec::new(); bundle.d];
    out[0].push(t.position(0)[0]);
    for (k, dir) in t.directions()?.into_iter().enumerate() {
        let axis = dir / 2;
        out[axis].push(t.position(k + 1)[axis]);
    }
    Ok(out)
}
