//! Adaptive Dormand–Prince 5(4) integrator.

use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step; `None` picks `|x1 - x0|/100`.
    pub h_init: Option<T>,
    pub h_min: T,
    pub max_steps: usize,
}

impl Default for OdeOptions<f64> {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, h_init: None, h_min: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded error weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn c<T: Float>(v: f64) -> T {
    T::from(v).expect("representable constant")
}

/// Integrates `y' = f(x, y)` from `x0` to exactly `x1`. `monitor` sees every
/// accepted step and may abort with an error. Returns `y(x1)` and the last
/// accepted step size.
pub fn dopri5<T, F, M>(
    mut f: F,
    x0: T,
    y0: &[T],
    x1: T,
    opts: &OdeOptions<T>,
    mut monitor: M,
    stats: &mut OdeStats,
) -> Result<(Vec<T>, T)>
where
    T: Float + std::fmt::Debug,
    F: FnMut(T, &[T], &mut [T]),
    M: FnMut(T, &[T]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut x = x0;
    let span = x1 - x0;
    if span == T::zero() {
        return Ok((y, T::zero()));
    }
    let dir = span.signum();
    let mut h = opts.h_init.unwrap_or(span.abs() / c(100.0)).abs().min(span.abs()) * dir;
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    let mut tmp = vec![T::zero(); n];
    let mut y_new = vec![T::zero(); n];
    f(x, &y, &mut k[0]);
    let mut steps = 0usize;
    let mut last_h = h;
    loop {
        if (x1 - x) * dir <= T::zero() {
            return Ok((y, last_h));
        }
        if steps >= opts.max_steps {
            return Err(Error::Integration { x: num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN), reason: "too many steps".into() });
        }
        steps += 1;
        let hit_end = (x + h - x1) * dir >= T::zero();
        if hit_end {
            h = x1 - x;
        }
        let stage = |coef: &[(usize, f64)], k: &Vec<Vec<T>>, tmp: &mut Vec<T>| {
            for i in 0..n {
                let mut s = T::zero();
                for &(j, a) in coef {
                    s = s + c::<T>(a) * k[j][i];
                }
                tmp[i] = y[i] + h * s;
            }
        };
        stage(&[(0, A21)], &k, &mut tmp);
        f(x + h * c(C2), &tmp, &mut k[1]);
        stage(&[(0, A31), (1, A32)], &k, &mut tmp);
        f(x + h * c(C3), &tmp, &mut k[2]);
        stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp);
        f(x + h * c(C4), &tmp, &mut k[3]);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp);
        f(x + h * c(C5), &tmp, &mut k[4]);
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp);
        f(x + h, &tmp, &mut k[5]);
        stage(&[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &k, &mut y_new);
        f(x + h, &y_new, &mut k[6]);

        let mut err = T::zero();
        for i in 0..n {
            let e = h
                * (c::<T>(E1) * k[0][i]
                    + c::<T>(E3) * k[2][i]
                    + c::<T>(E4) * k[3][i]
                    + c::<T>(E5) * k[4][i]
                    + c::<T>(E6) * k[5][i]
                    + c::<T>(E7) * k[6][i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err + (e / sc) * (e / sc);
        }
        err = (err / c(n as f64)).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration {
                x: num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN),
                reason: "non-finite error estimate".into(),
            });
        }
        if err <= T::one() {
            x = if hit_end { x1 } else { x + h };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            stats.accepted += 1;
            last_h = h;
            monitor(x, &y)?;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == T::zero() {
            c(5.0)
        } else {
            (c::<T>(0.9) * err.powf(c(-0.2))).max(c(0.2)).min(c(5.0))
        };
        let factor = if err > T::one() { factor.min(T::one()) } else { factor };
        h = h * factor;
        if h.abs() < opts.h_min {
            return Err(Error::Integration {
                x: num_traits::ToPrimitive::to_f64(&x).unwrap_or(f64::NAN),
                reason: "step size underflow".into(),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut st = OdeStats::default();
        let (y, _) = dopri5(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
            0.0,
            &[1.0],
            3.0,
            &OdeOptions::default(),
            |_, _| Ok(()),
            &mut st,
        )
        .unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-11);
        assert!(st.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_f32() {
        let opts = OdeOptions::<f32> { rtol: 1e-6, atol: 1e-7, h_init: None, h_min: 1e-8, max_steps: 100_000 };
        let mut st = OdeStats::default();
        let (y, _) = dopri5(
            |_, y: &[f32], dy: &mut [f32]| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0f32,
            &[0.0, 1.0],
            std::f32::consts::PI,
            &opts,
            |_, _| Ok(()),
            &mut st,
        )
        .unwrap();
        assert!(y[0].abs() < 1e-4 && (y[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn monitor_can_abort() {
        let mut st = OdeStats::default();
        let r = dopri5(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = y[0],
            0.0,
            &[1.0],
            10.0,
            &OdeOptions::default(),
            |x, y| {
                if y[0] > 100.0 {
                    Err(Error::Integration { x, reason: "too big".into() })
                } else {
                    Ok(())
                }
            },
            &mut st,
        );
        assert!(matches!(r, Err(Error::Integration { .. })));
    }

    #[test]
    fn blowup_underflows() {
        let mut st = OdeStats::default();
        let r = dopri5(
            |_, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            &OdeOptions::default(),
            |_, _| Ok(()),
            &mut st,
        );
        assert!(r.is_err());
    }
}
