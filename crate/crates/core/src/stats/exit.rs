//! Exit times `ζ_m = min{n : ‖S_n‖ ≥ m}`.

use serde::{Deserialize, Serialize};

use super::ensemble::run_replicas;
use super::reduce::MeanSe;
use crate::error::{Error, Result};
use crate::walk::{Trajectory, WalkParams, Walker};

/// Step cap for a single exit time.
pub const EXIT_CAP: u64 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitObservation {
    /// `ζ_m`, or the cap when censored.
    pub zeta: u64,
    pub censored: bool,
}

/// Streams `walker` until `‖S_n‖ ≥ m` or `n = cap`.
pub fn exit_time_streamed(walker: &mut Walker, m: u64, cap: u64) -> ExitObservation {
    let m2 = u128::from(m) * u128::from(m);
    while walker.state().norm2() < m2 {
        if walker.n() >= cap {
            return ExitObservation { zeta: walker.n(), censored: true };
        }
        walker.step();
    }
    ExitObservation { zeta: walker.n(), censored: false }
}

/// `ζ_m` on a stride-1 trajectory; `None` if it never exits.
pub fn exit_time(traj: &Trajectory, m: u64) -> Result<Option<u64>> {
    if traj.times.len() as u64 != traj.n_max {
        return Err(Error::InvalidParam("exit times need a stride-1 trajectory".into()));
    }
    let m2 = i128::from(m) * i128::from(m);
    Ok(traj
        .iter()
        .find(|(_, s)| s.iter().map(|&x| i128::from(x) * i128::from(x)).sum::<i128>() >= m2)
        .map(|(n, _)| n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    pub m: u64,
    pub mean: MeanSe,
    pub censored: u64,
    /// `6(m + 1)²`.
    pub universal_bound: f64,
    /// `mean ≤ bound + 3 s.e.`
    pub bound_ok: bool,
    /// Gambler's ruin `E ζ_m = m²` (only for `d = 1`, `p = 1/2`).
    pub gamblers_ruin: Option<bool>,
}

pub fn exit_time_ensemble(
    params: &WalkParams,
    m: u64,
    replicas: u64,
    seed: u64,
    workers: usize,
    cap: u64,
) -> Result<ExitReport> {
    params.validate()?;
    if m == 0 {
        return Err(Error::InvalidParam("radius must be positive".into()));
    }
    let obs = run_replicas(replicas, workers, |r| {
        let mut w = Walker::new(params, seed, r).expect("validated");
        exit_time_streamed(&mut w, m, cap)
    })?;
    let zs: Vec<f64> = obs.iter().map(|o| o.zeta as f64).collect();
    let mean = MeanSe::of(&zs);
    let censored = obs.iter().filter(|o| o.censored).count() as u64;
    let universal_bound = 6.0 * ((m + 1) * (m + 1)) as f64;
    let srw = params.d == 1 && params.p.cmp_rational(&num_rational::BigRational::new(1.into(), 2.into())).is_eq();
    let m2 = (m * m) as f64;
    Ok(ExitReport {
        m,
        mean,
        censored,
        universal_bound,
        bound_ok: mean.mean <= universal_bound + 3.0 * mean.se,
        gamblers_ruin: srw.then(|| censored == 0 && mean.within(m2, 3.0, 0.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::simulate;

    #[test]
    fn radius_one_exits_at_once() {
        let params = WalkParams::rational(3, 2, 5).unwrap();
        for s in 0..10 {
            let mut w = Walker::new(&params, s, 0).unwrap();
            assert_eq!(exit_time_streamed(&mut w, 1, EXIT_CAP), ExitObservation { zeta: 1, censored: false });
        }
    }

    #[test]
    fn streamed_matches_trajectory() {
        let params = WalkParams::rational(2, 1, 2).unwrap();
        let t = simulate(&params, 5000, 3, 1, 1).unwrap();
        let mut w = Walker::new(&params, 3, 1).unwrap();
        let o = exit_time_streamed(&mut w, 8, EXIT_CAP);
        assert_eq!(exit_time(&t, 8).unwrap(), Some(o.zeta));
    }

    #[test]
    fn censoring() {
        // p = 0, d = 1 alternates 1, 0, ±1, ...: ‖S‖ ≤ 1 for a long time.
        let params = WalkParams::rational(1, 0, 1).unwrap();
        let mut w = Walker::new(&params, 1, 0).unwrap();
        let o = exit_time_streamed(&mut w, 50, 100);
        assert!(o.censored && o.zeta == 100);
    }

    #[test]
    fn gamblers_ruin_small() {
        let params = WalkParams::rational(1, 1, 2).unwrap();
        let r = exit_time_ensemble(&params, 5, 4000, 11, 1, EXIT_CAP).unwrap();
        assert_eq!(r.gamblers_ruin, Some(true), "{r:?}");
        assert!(r.bound_ok);
    }
}
