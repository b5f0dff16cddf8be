//! One-step conditional laws of the MERW and the d-ERW.

use super::params::{memory_exponent, WalkParams};
use super::state::WalkState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Probabilities of the `2d` unit steps in the order `+e_1, -e_1, ..., +e_d, -e_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution<T> {
    pub probs: Vec<T>,
}

impl<T: Scalar> StepDistribution<T> {
    pub fn uniform(d: usize) -> Self {
        Self { probs: vec![T::from_ratio(1, 2 * d as i64); 2 * d] }
    }

    pub fn point_mass(d: usize, dir: usize) -> Self {
        let mut probs = vec![T::zero(); 2 * d];
        probs[dir] = T::one();
        Self { probs }
    }

    pub fn d(&self) -> usize {
        self.probs.len() / 2
    }

    /// Mass of axis `i`, `P(±e_i)`.
    pub fn axis_mass(&self, i: usize) -> T {
        self.probs[2 * i].clone() + self.probs[2 * i + 1].clone()
    }

    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |acc, p| acc + p.clone())
    }

    /// Entries in `[0, 1]` and total within `tol` of 1 (exact for rationals).
    pub fn check(&self, tol: f64) -> Result<()> {
        for (k, p) in self.probs.iter().enumerate() {
            if *p < T::zero() || *p > T::one() {
                return Err(Error::InconsistentState(format!("prob[{k}] = {p} outside [0, 1]")));
            }
        }
        let dev = (self.total() - T::one()).abs();
        let ok = if T::is_exact() { dev == T::zero() } else { dev.as_f64() <= tol };
        if ok {
            Ok(())
        } else {
            Err(Error::InconsistentState(format!("probabilities sum to 1 + {dev}")))
        }
    }
}

/// Per-walk constants in scalar form, so the hot loops do no parameter work.
#[derive(Clone, Debug)]
pub struct LawConstants<T> {
    pub a: T,
    /// `(1 - p)/(2d - 1)`
    pub base: T,
    /// `2q - 1` for the d-ERW
    pub q_bias: Option<T>,
}

impl<T: Scalar> LawConstants<T> {
    pub fn new(params: &WalkParams) -> Self {
        let p: T = params.p.to_scalar();
        let base = (T::one() - p.clone()) / T::from_u64(2 * params.d as u64 - 1);
        let q_bias = params
            .q
            .as_ref()
            .map(|q| T::from_u64(2) * q.to_scalar::<T>() - T::one());
        Self { a: memory_exponent(params.d, &p), base, q_bias }
    }
}

/// `probs(±e_i) = a N(±i)/n + (1 - p)/(2d - 1)` written into `out`.
#[inline]
pub fn merw_probs_into<T: Scalar>(state: &WalkState, k: &LawConstants<T>, out: &mut [T]) {
    let n = T::from_u64(state.n);
    for (o, &c) in out.iter_mut().zip(&state.dir_counts) {
        *o = k.a.clone() * T::from_u64(c) / n.clone() + k.base.clone();
    }
}

/// Axis probabilities `c_n(i) = a b(i)/n + (2 - 2p)/(2d - 1)`.
#[inline]
pub fn axis_weights_into<T: Scalar>(state: &WalkState, k: &LawConstants<T>, out: &mut [T]) {
    let n = T::from_u64(state.n);
    let base2 = k.base.clone() + k.base.clone();
    for (o, &b) in out.iter_mut().zip(&state.axis_counts) {
        *o = k.a.clone() * T::from_u64(b) / n.clone() + base2.clone();
    }
}

/// d-ERW law `c̃(i) (1/2 ± (2q - 1) x(i)/(2 b(i)))`, or `c̃(i)/2` each way when
/// `b(i) = 0`.
#[inline]
pub fn derw_probs_into<T: Scalar>(state: &WalkState, k: &LawConstants<T>, out: &mut [T]) {
    let q_bias = k.q_bias.clone().expect("d-ERW law needs q");
    let n = T::from_u64(state.n);
    let base2 = k.base.clone() + k.base.clone();
    let half = T::half();
    for i in 0..state.d() {
        let b = state.axis_counts[i];
        let c = k.a.clone() * T::from_u64(b) / n.clone() + base2.clone();
        if b == 0 {
            out[2 * i] = c.clone() * half.clone();
            out[2 * i + 1] = c * half.clone();
        } else {
            let t = q_bias.clone() * T::from_i64(state.position[i]) / T::from_u64(2 * b);
            out[2 * i] = c.clone() * (half.clone() + t.clone());
            out[2 * i + 1] = c * (half.clone() - t);
        }
        debug_assert!(out[2 * i] >= T::zero() && out[2 * i + 1] >= T::zero());
    }
}

fn validated(state: &WalkState, params: &WalkParams) -> Result<()> {
    params.validate()?;
    state.check()?;
    if state.d() != params.d {
        return Err(Error::InconsistentState(format!(
            "state dimension {} != d = {}",
            state.d(),
            params.d
        )));
    }
    Ok(())
}

pub fn merw_step_distribution<T: Scalar>(
    state: &WalkState,
    params: &WalkParams,
) -> Result<StepDistribution<T>> {
    validated(state, params)?;
    if params.q.is_some() {
        return Err(Error::InvalidParam("MERW law takes no q".into()));
    }
    let k = LawConstants::<T>::new(params);
    let mut probs = vec![T::zero(); 2 * params.d];
    merw_probs_into(state, &k, &mut probs);
    Ok(StepDistribution { probs })
}

pub fn derw_step_distribution<T: Scalar>(
    state: &WalkState,
    params: &WalkParams,
) -> Result<StepDistribution<T>> {
    validated(state, params)?;
    if params.q.is_none() {
        return Err(Error::InvalidParam("d-ERW law needs q".into()));
    }
    let k = LawConstants::<T>::new(params);
    let mut probs = vec![T::zero(); 2 * params.d];
    derw_probs_into(state, &k, &mut probs);
    Ok(StepDistribution { probs })
}

/// `c_n(i)` for the MERW parameters (the q of a d-ERW is ignored).
pub fn axis_weights<T: Scalar>(state: &WalkState, params: &WalkParams) -> Result<Vec<T>> {
    validated(state, params)?;
    let k = LawConstants::<T>::new(params);
    let mut out = vec![T::zero(); params.d];
    axis_weights_into(state, &k, &mut out);
    Ok(out)
}

/// Inverse CDF over `probs` with half-open cells `[c_{k-1}, c_k)`. If rounding
/// leaves `u` beyond the last cumulative sum, the last index with positive
/// mass is returned.
#[inline]
pub fn select_direction<T: Scalar>(probs: &[T], u: &T) -> usize {
    let mut acc = T::zero();
    for (k, p) in probs.iter().enumerate() {
        acc = acc + p.clone();
        if *u < acc {
            return k;
        }
    }
    probs.iter().rposition(|p| *p > T::zero()).unwrap_or(probs.len() - 1)
}

/// State at `n + 1` after sampling a direction from `dist` with the uniform `u`.
pub fn advance<T: Scalar>(state: &WalkState, dist: &StepDistribution<T>, u: f64) -> WalkState {
    let mut next = state.clone();
    next.push(select_direction(&dist.probs, &T::from_f64(u)));
    next
}

/// `(a|S|²/n, |S|²/d + Σ a (b(i)/n - 1/d) S(i)²)`: the conditional drift
/// `E[<S_n, σ_{n+1}> | F_n]` and second moment `E[<S_n, σ_{n+1}>² | F_n]`.
pub fn conditional_moments<T: Scalar>(state: &WalkState, params: &WalkParams) -> Result<(T, T)> {
    validated(state, params)?;
    let p: T = params.p.to_scalar();
    let a = memory_exponent(params.d, &p);
    let n = T::from_u64(state.n);
    let d = T::from_u64(params.d as u64);
    let mut norm2 = T::zero();
    let mut correction = T::zero();
    for i in 0..params.d {
        let x = T::from_i64(state.position[i]);
        let x2 = x.clone() * x;
        let eta = T::from_u64(state.axis_counts[i]) / n.clone() - T::one() / d.clone();
        correction = correction + a.clone() * eta * x2.clone();
        norm2 = norm2 + x2;
    }
    let drift = a * norm2.clone() / n;
    let second = norm2 / d + correction;
    Ok((drift, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::params::{Prob, SignedAxis};
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn first_step_d1() {
        let params = WalkParams::rational(1, 7, 10).unwrap();
        let s = WalkState::initial(1, SignedAxis::E1);
        let dist = merw_step_distribution::<BigRational>(&s, &params).unwrap();
        assert_eq!(dist.probs, vec![q(7, 10), q(3, 10)]);
    }

    #[test]
    fn first_step_d2_critical() {
        let params = WalkParams::rational(2, 5, 8).unwrap();
        let s = WalkState::initial(2, SignedAxis::E1);
        let dist = merw_step_distribution::<BigRational>(&s, &params).unwrap();
        assert_eq!(dist.probs, vec![q(5, 8), q(1, 8), q(1, 8), q(1, 8)]);
        dist.check(0.0).unwrap();
    }

    #[test]
    fn uniform_at_one_over_2d() {
        let params = WalkParams::rational(3, 1, 6).unwrap();
        let s = WalkState::from_dir_counts(vec![5, 0, 2, 7, 0, 1]).unwrap();
        let dist = merw_step_distribution::<BigRational>(&s, &params).unwrap();
        assert_eq!(dist, StepDistribution::uniform(3));
    }

    #[test]
    fn derw_examples() {
        let s = WalkState::from_dir_counts(vec![3, 1, 2, 2]).unwrap();
        let params = WalkParams::rational(2, 7, 10).unwrap().with_q(Prob::from_ratio(1, 2)).unwrap();
        let dist = derw_step_distribution::<BigRational>(&s, &params).unwrap();
        let c = axis_weights::<BigRational>(&s, &params).unwrap();
        for i in 0..2 {
            assert_eq!(dist.probs[2 * i], c[i].clone() / q(2, 1));
            assert_eq!(dist.probs[2 * i + 1], c[i].clone() / q(2, 1));
        }

        let s1 = WalkState::initial(1, SignedAxis::E1);
        let params = WalkParams::rational(1, 9, 10).unwrap().with_q(Prob::from_ratio(1, 3)).unwrap();
        let dist = derw_step_distribution::<BigRational>(&s1, &params).unwrap();
        assert_eq!(dist.probs, vec![q(1, 3), q(2, 3)]);

        let s = WalkState::from_dir_counts(vec![6, 0, 0, 0]).unwrap();
        let params = WalkParams::rational(2, 3, 5).unwrap().with_q(Prob::from_ratio(1, 1)).unwrap();
        let dist = derw_step_distribution::<BigRational>(&s, &params).unwrap();
        let c = axis_weights::<BigRational>(&s, &params).unwrap();
        assert_eq!(dist.probs[0], c[0]);
        assert_eq!(dist.probs[1], q(0, 1));
        dist.check(0.0).unwrap();
    }

    #[test]
    fn law_kind_mismatch() {
        let s = WalkState::initial(1, SignedAxis::E1);
        let merw = WalkParams::rational(1, 1, 2).unwrap();
        let derw = merw.clone().with_q(Prob::from_ratio(1, 2)).unwrap();
        assert!(merw_step_distribution::<f64>(&s, &derw).is_err());
        assert!(derw_step_distribution::<f64>(&s, &merw).is_err());
        let mut bad = s.clone();
        bad.n = 2;
        assert!(merw_step_distribution::<f64>(&bad, &merw).is_err());
        assert!(merw_step_distribution::<f64>(&s, &WalkParams::rational(2, 1, 2).unwrap()).is_err());
    }

    #[test]
    fn advance_examples() {
        let s = WalkState::initial(2, SignedAxis::E1);
        let mut probs = vec![0.0; 4];
        probs[1] = 0.5;
        probs[3] = 0.5;
        let dist = StepDistribution { probs };
        assert_eq!(advance(&s, &dist, 0.0).dir_counts, vec![1, 1, 0, 0]);

        let pm = StepDistribution::<f64>::point_mass(2, 3);
        for u in [0.0, 0.3, 0.999_999] {
            let next = advance(&s, &pm, u);
            assert_eq!(next.position, vec![1, -1]);
            assert_eq!(next.axis_counts[1], s.axis_counts[1] + 1);
        }

        let uni = StepDistribution::<f64>::uniform(2);
        assert_eq!(advance(&s, &uni, 0.5).dir_counts, vec![1, 0, 1, 0]);
        assert_eq!(select_direction(&uni.probs, &0.25), 1);
        assert_eq!(select_direction(&uni.probs, &0.249_999), 0);
    }

    #[test]
    fn select_falls_back_to_last_positive() {
        let probs = [0.3, 0.3, 0.3999999, 0.0];
        assert_eq!(select_direction(&probs, &0.999_999_99), 2);
    }

    #[test]
    fn moments_examples() {
        let s = WalkState::from_dir_counts(vec![4, 1, 0, 3]).unwrap();
        let params = WalkParams::rational(2, 1, 4).unwrap();
        let (drift, second) = conditional_moments::<BigRational>(&s, &params).unwrap();
        assert_eq!(drift, q(0, 1));
        assert_eq!(second, q(18, 2));

        let s1 = WalkState::initial(1, SignedAxis::E1);
        let params = WalkParams::rational(1, 4, 5).unwrap();
        let (drift, second) = conditional_moments::<BigRational>(&s1, &params).unwrap();
        assert_eq!(drift, q(3, 5));
        assert_eq!(second, q(1, 1));

        let s = WalkState::from_dir_counts(vec![5, 0, 1, 4]).unwrap();
        let params = WalkParams::rational(2, 9, 10).unwrap();
        let (_, second) = conditional_moments::<BigRational>(&s, &params).unwrap();
        assert_eq!(second, q(34, 2));
    }

    /// Conditional moments against direct summation over the step law.
    #[test]
    fn moments_match_law() {
        let s = WalkState::from_dir_counts(vec![7, 2, 1, 4, 3, 3]).unwrap();
        for (n, m) in [(0, 1), (1, 6), (2, 5), (7, 12), (1, 1)] {
            let params = WalkParams::rational(3, n, m).unwrap();
            let dist = merw_step_distribution::<BigRational>(&s, &params).unwrap();
            let mut drift = q(0, 1);
            let mut second = q(0, 1);
            for (k, pk) in dist.probs.iter().enumerate() {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                let inner = q(sign * s.position[k / 2], 1);
                drift += pk.clone() * inner.clone();
                second += pk.clone() * inner.clone() * inner;
            }
            let (d2, s2) = conditional_moments::<BigRational>(&s, &params).unwrap();
            assert_eq!(drift, d2);
            assert_eq!(second, s2);
        }
    }
}
