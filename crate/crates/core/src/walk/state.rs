use serde::{Deserialize, Serialize};

use super::params::SignedAxis;
use crate::error::{Error, Result};

/// Largest supported time index.
pub const MAX_STEPS: u64 = 1 << 62;

/// Sufficient statistic of a walk at time `n`. Direction counts are ordered
/// `+e_1, -e_1, ..., +e_d, -e_d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkState {
    pub n: u64,
    pub position: Vec<i64>,
    pub dir_counts: Vec<u64>,
    pub axis_counts: Vec<u64>,
}

impl WalkState {
    /// State at `n = 1` after the step `first`.
    pub fn initial(d: usize, first: SignedAxis) -> Self {
        let mut s = Self {
            n: 0,
            position: vec![0; d],
            dir_counts: vec![0; 2 * d],
            axis_counts: vec![0; d],
        };
        s.push(first.direction());
        s
    }

    pub fn from_dir_counts(dir_counts: Vec<u64>) -> Result<Self> {
        if dir_counts.is_empty() || !dir_counts.len().is_multiple_of(2) {
            return Err(Error::InconsistentState("need 2d direction counts".into()));
        }
        let d = dir_counts.len() / 2;
        let mut position = vec![0i64; d];
        let mut axis_counts = vec![0u64; d];
        for i in 0..d {
            let (plus, minus) = (dir_counts[2 * i], dir_counts[2 * i + 1]);
            position[i] = plus as i64 - minus as i64;
            axis_counts[i] = plus + minus;
        }
        let n = axis_counts.iter().sum();
        let s = Self { n, position, dir_counts, axis_counts };
        s.check()?;
        Ok(s)
    }

    pub fn d(&self) -> usize {
        self.position.len()
    }

    #[inline]
    pub fn push(&mut self, dir: usize) {
        let axis = dir / 2;
        self.n += 1;
        self.dir_counts[dir] += 1;
        self.axis_counts[axis] += 1;
        self.position[axis] += if dir.is_multiple_of(2) { 1 } else { -1 };
    }

    pub fn norm2(&self) -> u128 {
        self.position.iter().map(|&x| (x as i128 * x as i128) as u128).sum()
    }

    pub fn norm2_f64(&self) -> f64 {
        self.position.iter().map(|&x| (x as f64) * (x as f64)).sum()
    }

    pub fn is_origin(&self) -> bool {
        self.position.iter().all(|&x| x == 0)
    }

    /// Bookkeeping identities: `Σ b = n`, `N(i) + N(-i) = b(i)`,
    /// `N(i) - N(-i) = S(i)`, `|S|_∞ ≤ n`, `n ≥ 1`.
    pub fn check(&self) -> Result<()> {
        let d = self.position.len();
        let fail = |m: String| Err(Error::InconsistentState(m));
        if d == 0 || self.dir_counts.len() != 2 * d || self.axis_counts.len() != d {
            return fail("length mismatch".into());
        }
        if self.n == 0 || self.n > MAX_STEPS {
            return fail(format!("n = {} outside [1, 2^62]", self.n));
        }
        let mut total = 0u64;
        for i in 0..d {
            let (plus, minus) = (self.dir_counts[2 * i], self.dir_counts[2 * i + 1]);
            if plus + minus != self.axis_counts[i] {
                return fail(format!("N(+{0}) + N(-{0}) != b({0})", i + 1));
            }
            if plus as i64 - minus as i64 != self.position[i] {
                return fail(format!("N(+{0}) - N(-{0}) != S({0})", i + 1));
            }
            if self.position[i].unsigned_abs() > self.n {
                return fail(format!("|S({})| > n", i + 1));
            }
            total += self.axis_counts[i];
        }
        if total != self.n {
            return fail(format!("sum of axis counts {total} != n = {}", self.n));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state() {
        let s = WalkState::initial(3, "-2".parse().unwrap());
        assert_eq!(s.n, 1);
        assert_eq!(s.position, vec![0, -1, 0]);
        assert_eq!(s.dir_counts, vec![0, 0, 0, 1, 0, 0]);
        assert_eq!(s.axis_counts, vec![0, 1, 0]);
        s.check().unwrap();
    }

    #[test]
    fn from_counts_and_check() {
        let s = WalkState::from_dir_counts(vec![3, 1, 0, 2]).unwrap();
        assert_eq!(s.n, 6);
        assert_eq!(s.position, vec![2, -2]);
        assert_eq!(s.norm2(), 8);
        let mut bad = s.clone();
        bad.position[0] = 5;
        assert!(bad.check().is_err());
        let mut bad = s;
        bad.n = 7;
        assert!(bad.check().is_err());
        assert!(WalkState::from_dir_counts(vec![0, 0]).is_err());
    }
}
