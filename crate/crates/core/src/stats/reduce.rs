//! Order-fixed reductions. Sums use a balanced binary tree over the input
//! order, so results depend only on the data, never on scheduling.

use serde::{Deserialize, Serialize};

pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
        }
    }
}

/// Sample mean with its standard error `s/√R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, count };
        }
        let mean = tree_sum(xs) / count as f64;
        if count == 1 {
            return Self { mean, se: 0.0, count };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = tree_sum(&dev) / (count - 1) as f64;
        Self { mean, se: (var / count as f64).sqrt(), count }
    }

    /// `|mean - target| ≤ k·se + floor`.
    pub fn within(&self, target: f64, k: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + floor
    }

    pub fn z(&self, target: f64) -> f64 {
        if self.se == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target) / self.se
        }
    }
}

/// Column `j` of per-replica rows.
pub fn column<T: Copy>(rows: &[Vec<T>], j: usize) -> Vec<T> {
    rows.iter().map(|r| r[j]).collect()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ys` on `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = tree_sum(xs) / n;
    let my = tree_sum(ys) / n;
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    tree_sum(&sxy) / tree_sum(&sxx)
}

/// `count` points log-spaced in `[lo, hi]`, rounded and deduplicated.
pub fn log_checkpoints(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    if count <= 1 || lo >= hi {
        return vec![hi];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp().round() as u64)
        .collect();
    out[0] = lo;
    out[count - 1] = hi;
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(tree_sum(&xs), 500_500.0);
        assert_eq!(tree_sum(&[]), 0.0);
    }

    #[test]
    fn mean_se() {
        let m = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(m.within(2.6, 1.0, 0.0));
        assert_eq!(MeanSe::of(&[3.0, 3.0]).z(3.0), 0.0);
    }

    #[test]
    fn helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let xs = [1.0, 2.0, 3.0];
        assert!((ls_slope(&xs, &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-12);
        let c = log_checkpoints(10, 10_000, 4);
        assert_eq!(c, vec![10, 100, 1000, 10_000]);
    }
}
