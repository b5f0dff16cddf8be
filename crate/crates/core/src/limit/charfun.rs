//! Characteristic function `φ = f + i g` of `w` on a symmetric uniform grid.

use std::io::Write;

use num_complex::Complex;
use serde::Serialize;

use super::ode::{dopri5, OdeOptions, OdeStats};
use super::series::{charfun_series, eval_series, general_d_coefficients_f64, SeriesTarget};
use crate::error::{Error, Result};
use crate::stats::ls_slope;
use crate::walk::{memory_exponent, regime, urn_weights, Prob, Regime, WalkParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CharFunMethod {
    Series,
    Ode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharFunGrid {
    pub d: usize,
    pub p: Prob,
    pub a: f64,
    /// Strictly increasing, symmetric about 0, uniform spacing.
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub method: CharFunMethod,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharFunOdeOptions {
    /// Start of the integration; `[0, x0]` is covered by the series.
    pub x0: f64,
    pub series_order: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Allowed excess of `|φ|²` over 1.
    pub modulus_tol: f64,
}

impl Default for CharFunOdeOptions {
    fn default() -> Self {
        Self { x0: 1e-3, series_order: 12, rtol: 1e-10, atol: 1e-12, modulus_tol: 1e-8 }
    }
}

/// `0, ±step, ..., ±n step` with `n = round(x_max/step)`.
pub fn symmetric_grid(x_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(x_max > 0.0 && step > 0.0 && step <= x_max && x_max.is_finite()) {
        return Err(Error::InvalidParam(format!("bad grid x_max = {x_max}, step = {step}")));
    }
    let n = (x_max / step).round() as i64;
    Ok((-n..=n).map(|j| j as f64 * step).collect())
}

impl CharFunGrid {
    fn from_positive(d: usize, p: Prob, a: f64, step: f64, pos: Vec<Complex<f64>>, method: CharFunMethod) -> Self {
        let n = pos.len() as i64 - 1;
        let mut x = Vec::with_capacity(2 * pos.len() - 1);
        let mut f = Vec::with_capacity(x.capacity());
        let mut g = Vec::with_capacity(x.capacity());
        for j in -n..=n {
            let z = pos[j.unsigned_abs() as usize];
            x.push(j as f64 * step);
            f.push(z.re);
            g.push(if j < 0 { -z.im } else { z.im });
        }
        Self { d, p, a, x, f, g, method }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap_or(&0.0)
    }

    pub fn step(&self) -> f64 {
        if self.x.len() < 2 {
            0.0
        } else {
            self.x[1] - self.x[0]
        }
    }

    /// Index of `x = 0`.
    pub fn origin(&self) -> usize {
        self.x.len() / 2
    }

    pub fn value(&self, k: usize) -> Complex<f64> {
        Complex::new(self.f[k], self.g[k])
    }

    /// Origin value, `|φ| ≤ 1 + tol`, parity.
    pub fn check(&self, tol: f64) -> Result<()> {
        let o = self.origin();
        if self.x.len().is_multiple_of(2) || self.x[o] != 0.0 {
            return Err(Error::InconsistentState("grid has no origin node".into()));
        }
        if self.f[o] != 1.0 || self.g[o] != 0.0 {
            return Err(Error::InconsistentState(format!("φ(0) = {} + {}i", self.f[o], self.g[o])));
        }
        for k in 0..self.len() {
            let m = self.f[k] * self.f[k] + self.g[k] * self.g[k];
            if !(m <= 1.0 + tol) {
                return Err(Error::InconsistentState(format!("|φ({})|² = {m}", self.x[k])));
            }
            let r = self.len() - 1 - k;
            if self.x[r] != -self.x[k] || self.f[r] != self.f[k] || self.g[r] != -self.g[k] {
                return Err(Error::InconsistentState(format!("parity broken at x = {}", self.x[k])));
            }
        }
        Ok(())
    }

    /// CSV `x,f,g`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,f,g")?;
        for k in 0..self.len() {
            writeln!(w, "{:.17e},{:.17e},{:.17e}", self.x[k], self.f[k], self.g[k])?;
        }
        Ok(())
    }
}

fn require_superdiffusive(params: &WalkParams) -> Result<f64> {
    params.validate()?;
    if regime(params) != Regime::Superdiffusive {
        return Err(Error::Regime(format!("φ of w needs p > p_d, got p = {}", params.p)));
    }
    Ok(memory_exponent(params.d, &params.p.value()))
}

/// `φ_W` for `d = 1` by the moment series on a symmetric grid inside the disc.
pub fn charfun_series_grid(p: &Prob, x_max: f64, step: f64, order: usize) -> Result<CharFunGrid> {
    let params = WalkParams::new(1, p.clone())?;
    let a = require_superdiffusive(&params)?;
    let grid = symmetric_grid(x_max, step)?;
    let n = grid.len() / 2;
    let mut pos = Vec::with_capacity(n + 1);
    for j in 0..=n {
        pos.push(charfun_series(p, grid[n + j], order, SeriesTarget::W)?.value());
    }
    pos[0] = Complex::new(1.0, 0.0);
    Ok(CharFunGrid::from_positive(1, p.clone(), a, step, pos, CharFunMethod::Series))
}

/// Integrates
/// `f' = (f² + κ g² - f)/(a x)`, `g' = (2A f g - g)/(a x)`, `κ = (1 - 2dp)/(2d - 1)`,
/// outward from `x0` (series start) node to node, then mirrors by parity.
pub fn integrate_charfun_ode(
    params: &WalkParams,
    x_max: f64,
    step: f64,
    opts: &CharFunOdeOptions,
) -> Result<CharFunGrid> {
    let a = require_superdiffusive(params)?;
    let d = params.d;
    let p = params.p.value();
    let grid = symmetric_grid(x_max, step)?;
    let n = grid.len() / 2;
    let coeffs = general_d_coefficients_f64(d, &params.p, opts.series_order)?;
    let kappa = (1.0 - 2.0 * d as f64 * p) / (2 * d - 1) as f64;
    let two_a = 2.0 * urn_weights(d, &p).0;
    let rhs = |x: f64, y: &[f64], dy: &mut [f64]| {
        let (f, g) = (y[0], y[1]);
        dy[0] = (f * f + kappa * g * g - f) / (a * x);
        dy[1] = (two_a * f * g - g) / (a * x);
    };
    let ode_opts = OdeOptions { rtol: opts.rtol, atol: opts.atol, h_init: None, h_min: 1e-13, max_steps: 1_000_000 };
    let tol = opts.modulus_tol;
    let monitor = |x: f64, y: &[f64]| {
        let m = y[0] * y[0] + y[1] * y[1];
        if m > 1.0 + tol || !m.is_finite() {
            Err(Error::Integration { x, reason: format!("|φ|² = {m} exceeds 1 + {tol}") })
        } else {
            Ok(())
        }
    };

    let mut pos = Vec::with_capacity(n + 1);
    pos.push(Complex::new(1.0, 0.0));
    let start = eval_series(&coeffs, opts.x0);
    let mut x = opts.x0;
    let mut y = vec![start.re, start.im];
    let mut h = None;
    let mut stats = OdeStats::default();
    for j in 1..=n {
        let xj = grid[n + j];
        if xj <= opts.x0 {
            pos.push(eval_series(&coeffs, xj));
            continue;
        }
        let o = OdeOptions { h_init: h, ..ode_opts };
        let (y1, last) = dopri5(rhs, x, &y, xj, &o, monitor, &mut stats)?;
        y = y1;
        x = xj;
        if last != 0.0 {
            h = Some(last.abs());
        }
        pos.push(Complex::new(y[0], y[1]));
    }
    let out = CharFunGrid::from_positive(d, params.p.clone(), a, step, pos, CharFunMethod::Ode);
    out.check(tol)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailCheck {
    /// `sup |x|^{1/a} |φ(x)|` over the grid.
    pub sup: f64,
    /// Least-squares slope of `log(|x|^{1/a}|φ|)` against `log x` on `[x_max/10, x_max]`.
    pub last_decade_slope: f64,
    pub x_max: f64,
    pub passed: bool,
}

/// Stabilization threshold on the last-decade slope.
pub const TAIL_SLOPE_MAX: f64 = 0.05;

pub fn tail_exponent_check(grid: &CharFunGrid) -> Result<TailCheck> {
    let x_max = grid.x_max();
    if x_max < 50.0 {
        return Err(Error::Domain(format!("tail check needs x_max ≥ 50, got {x_max}")));
    }
    let inv_a = 1.0 / grid.a;
    let mut sup: f64 = 0.0;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for k in 0..grid.len() {
        let x = grid.x[k].abs();
        let v = x.powf(inv_a) * grid.value(k).norm();
        sup = sup.max(v);
        if grid.x[k] >= x_max / 10.0 && v > 0.0 {
            lx.push(x.ln());
            ly.push(v.ln());
        }
    }
    let slope = ls_slope(&lx, &ly);
    Ok(TailCheck { sup, last_decade_slope: slope, x_max, passed: sup.is_finite() && slope <= TAIL_SLOPE_MAX })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_charfun(x: f64) -> Complex<f64> {
        Complex::new(1.0, 0.0) / Complex::new(1.0, -x)
    }

    #[test]
    fn p_one_ode_is_exponential() {
        let params = WalkParams::rational(1, 1, 1).unwrap();
        let grid = integrate_charfun_ode(&params, 50.0, 0.1, &CharFunOdeOptions::default()).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..grid.len() {
            worst = worst.max((grid.value(k) - exp_charfun(grid.x[k])).norm());
        }
        assert!(worst < 1e-8, "{worst}");
        let tail = tail_exponent_check(&grid).unwrap();
        assert!(tail.passed && (tail.sup - 1.0).abs() < 1e-3, "{tail:?}");
    }

    #[test]
    fn series_and_ode_agree_p09() {
        let p = Prob::from_ratio(9, 10);
        let params = WalkParams::new(1, p.clone()).unwrap();
        let ode = integrate_charfun_ode(&params, 0.3, 0.05, &CharFunOdeOptions::default()).unwrap();
        let ser = charfun_series_grid(&p, 0.3, 0.05, 60).unwrap();
        for k in 0..ode.len() {
            assert!((ode.value(k) - ser.value(k)).norm() < 1e-6, "x = {}", ode.x[k]);
        }
    }

    #[test]
    fn grid_shape() {
        let g = symmetric_grid(1.0, 0.25).unwrap();
        assert_eq!(g, vec![-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(symmetric_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn regime_and_domain_errors() {
        let params = WalkParams::rational(2, 3, 5).unwrap();
        assert!(matches!(
            integrate_charfun_ode(&params, 1.0, 0.1, &CharFunOdeOptions::default()),
            Err(Error::Regime(_))
        ));
        let params = WalkParams::rational(1, 1, 1).unwrap();
        let g = integrate_charfun_ode(&params, 10.0, 0.1, &CharFunOdeOptions::default()).unwrap();
        assert!(matches!(tail_exponent_check(&g), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_header() {
        let params = WalkParams::rational(1, 9, 10).unwrap();
        let g = integrate_charfun_ode(&params, 0.2, 0.1, &CharFunOdeOptions::default()).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,f,g\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
