//! Density of `w` by Fourier inversion of a characteristic-function grid.

use std::io::Write;

use serde::Serialize;

use super::charfun::{tail_exponent_check, CharFunGrid, TailCheck};
use crate::error::{Error, Result};

/// Target for the truncation certificate.
pub const TAIL_TARGET: f64 = 1e-3;

/// `C ∫_X^∞ x^{-1/a} dx = C X^{1 - 1/a}/(1/a - 1)`; infinite when `a ≥ 1`.
pub fn tail_bound(sup: f64, a: f64, x: f64) -> f64 {
    let s = 1.0 / a;
    if s <= 1.0 {
        return f64::INFINITY;
    }
    sup * x.powf(1.0 - s) / (s - 1.0)
}

/// Smallest `X` with `tail_bound(sup, a, X) < target`.
pub fn inversion_cutoff(sup: f64, a: f64, target: f64) -> f64 {
    let s = 1.0 / a;
    if s <= 1.0 {
        return f64::INFINITY;
    }
    (target * (s - 1.0) / sup).powf(1.0 / (1.0 - s))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOptions {
    pub x_lo: f64,
    pub x_hi: f64,
    pub dx: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self { x_lo: -10.0, x_hi: 40.0, dx: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    #[serde(skip)]
    pub x: Vec<f64>,
    #[serde(skip)]
    pub pw: Vec<f64>,
    pub mass: f64,
    pub min_value: f64,
    #[serde(rename = "X_max")]
    pub x_max: f64,
    /// Quadrature step in the frequency variable.
    pub step: f64,
    pub tail: TailCheck,
    /// `tail_bound` at `X_max`.
    pub tail_bound: f64,
    /// Whether `tail_bound < TAIL_TARGET`.
    pub certified: bool,
}

impl DensityEstimate {
    /// Cumulative trapezoid of `pw` on the output grid.
    pub fn cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.x.len());
        let mut acc = 0.0;
        out.push(0.0);
        for k in 1..self.x.len() {
            acc += 0.5 * (self.pw[k] + self.pw[k - 1]) * (self.x[k] - self.x[k - 1]);
            out.push(acc);
        }
        out
    }

    /// Linear interpolation of `cdf()`, clamped at the grid ends.
    pub fn cdf_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        let c = self.cdf();
        move |t| {
            if t <= self.x[0] {
                return 0.0;
            }
            let last = self.x.len() - 1;
            if t >= self.x[last] {
                return c[last];
            }
            let dx = self.x[1] - self.x[0];
            let k = (((t - self.x[0]) / dx) as usize).min(last - 1);
            let w = (t - self.x[k]) / dx;
            c[k] + w * (c[k + 1] - c[k])
        }
    }

    /// CSV `x,pw`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,pw")?;
        for (x, p) in self.x.iter().zip(&self.pw) {
            writeln!(w, "{x:.17e},{p:.17e}")?;
        }
        Ok(())
    }

    pub fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }
}

/// `p_w(x) = (1/π) ∫_0^X (f(z) cos xz + g(z) sin xz) dz` by the trapezoid rule
/// on the positive half of the grid, with `X` the smaller of the grid end and
/// the certified cutoff.
pub fn density_fourier_inversion(grid: &CharFunGrid, opts: &DensityOptions) -> Result<DensityEstimate> {
    let tail = tail_exponent_check(grid)?;
    if !tail.passed {
        return Err(Error::Domain(format!(
            "tail of φ not stabilized (slope {}, sup {}); inversion refused",
            tail.last_decade_slope, tail.sup
        )));
    }
    if !(opts.dx > 0.0 && opts.x_hi > opts.x_lo) {
        return Err(Error::InvalidParam("bad output grid".into()));
    }
    let h = grid.step();
    let o = grid.origin();
    let cutoff = inversion_cutoff(tail.sup, grid.a, TAIL_TARGET);
    let m = if cutoff < grid.x_max() { ((cutoff / h).ceil() as usize).min(grid.len() - 1 - o) } else { grid.len() - 1 - o };
    let x_max = m as f64 * h;
    let bound = tail_bound(tail.sup, grid.a, x_max);

    let f = &grid.f[o..=o + m];
    let g = &grid.g[o..=o + m];
    let count = ((opts.x_hi - opts.x_lo) / opts.dx).round() as usize + 1;
    let xs: Vec<f64> = (0..count).map(|k| opts.x_lo + k as f64 * opts.dx).collect();
    let pw: Vec<f64> = xs
        .iter()
        .map(|&x| {
            // e^{i x z_j} by rotation, re-anchored every 1024 nodes.
            let (s1, c1) = (x * h).sin_cos();
            let (mut c, mut s) = (1.0, 0.0);
            let mut acc = 0.5 * f[0];
            for j in 1..=m {
                if j % 1024 == 0 {
                    let (sj, cj) = (x * h * j as f64).sin_cos();
                    c = cj;
                    s = sj;
                } else {
                    let cn = c * c1 - s * s1;
                    s = s * c1 + c * s1;
                    c = cn;
                }
                let w = if j == m { 0.5 } else { 1.0 };
                acc += w * (f[j] * c + g[j] * s);
            }
            acc * h / std::f64::consts::PI
        })
        .collect();
    let mut mass = 0.0;
    for k in 1..count {
        mass += 0.5 * (pw[k] + pw[k - 1]) * opts.dx;
    }
    let min_value = pw.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DensityEstimate {
        x: xs,
        pw,
        mass,
        min_value,
        x_max,
        step: h,
        tail,
        tail_bound: bound,
        certified: bound < TAIL_TARGET,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::charfun::{integrate_charfun_ode, CharFunOdeOptions};
    use crate::walk::WalkParams;

    #[test]
    fn cutoff_inverts_bound() {
        let x = inversion_cutoff(2.0, 0.8, 1e-3);
        assert!((tail_bound(2.0, 0.8, x) / 1e-3 - 1.0).abs() < 1e-9);
        assert!(inversion_cutoff(1.0, 1.0, 1e-3).is_infinite());
    }

    #[test]
    fn p_one_recovers_exponential() {
        let params = WalkParams::rational(1, 1, 1).unwrap();
        let grid = integrate_charfun_ode(&params, 400.0, 0.05, &CharFunOdeOptions::default()).unwrap();
        let est = density_fourier_inversion(&grid, &DensityOptions { x_lo: -1.0, x_hi: 10.0, dx: 0.01 }).unwrap();
        assert!(!est.certified);
        let mut l1 = 0.0;
        for (x, p) in est.x.iter().zip(&est.pw) {
            if x.abs() > 0.1 {
                let exact = if *x > 0.0 { (-x).exp() } else { 0.0 };
                l1 += (p - exact).abs() * 0.01;
            }
        }
        assert!(l1 < 0.02, "{l1}");
        assert!((est.mass - 1.0).abs() < 0.02, "{}", est.mass);
        let cdf = est.cdf_fn();
        assert!((cdf(3.0) - (1.0 - (-3.0f64).exp())).abs() < 0.01);
    }
}
