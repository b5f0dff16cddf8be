use merw_core::limit::{
    charfun_series, integrate_charfun_ode, moment_recursion, moment_table, series_coefficients_general_d,
    CharFunOdeOptions, SeriesTarget,
};
use merw_core::urn::sample_w;
use merw_core::walk::{Prob, WalkParams};
use merw_core::Rational;
use proptest::prelude::*;

fn params(d: usize, n: i64, m: i64) -> WalkParams {
    WalkParams::rational(d, n, m).unwrap()
}

#[test]
fn ode_grid_parity_and_modulus() {
    for (d, n, m) in [(1, 9, 10), (2, 4, 5), (3, 5, 6)] {
        let g = integrate_charfun_ode(&params(d, n, m), 30.0, 0.05, &CharFunOdeOptions::default()).unwrap();
        g.check(1e-8).unwrap();
    }
}

/// `φ'(0) = i E w = i` and `φ''(0) = -E w² = -r_2`, by central differences.
#[test]
fn derivatives_at_origin_match_moments() {
    for (n, m) in [(4, 5), (9, 10), (1, 1)] {
        let prm = params(1, n, m);
        let h = 1e-3;
        let g = integrate_charfun_ode(&prm, 10.0 * h, h, &CharFunOdeOptions::default()).unwrap();
        let o = g.origin();
        let g1 = (g.g[o + 1] - g.g[o - 1]) / (2.0 * h);
        let f2 = (g.f[o + 1] - 2.0 * g.f[o] + g.f[o - 1]) / (h * h);
        let r2 = merw_core::scalar::rational_to_f64(&moment_recursion(&prm.p, 2).unwrap().r[2]);
        assert!((g1 - 1.0).abs() < 1e-4, "g'(0) = {g1}");
        assert!((f2 + r2).abs() < 1e-3, "f''(0) = {f2}, r_2 = {r2}");
    }
}

/// The d = 1 instance of the general-d coefficient recursion equals
/// `i^n r_n / n!` exactly.
#[test]
fn general_d_series_reduces_to_moments() {
    let p = Rational::new(17.into(), 20.into());
    let table = moment_recursion(&Prob::from_rational(p.clone()), 15).unwrap();
    let c = series_coefficients_general_d::<Rational>(1, &p, 15);
    let mut fact = Rational::from_integer(1.into());
    for k in 1..=15usize {
        fact *= Rational::from_integer((k as i64).into());
        let mag = &table.r[k] / &fact;
        let (re, im) = match k % 4 {
            0 => (mag.clone(), Rational::from_integer(0.into())),
            1 => (Rational::from_integer(0.into()), mag.clone()),
            2 => (-mag.clone(), Rational::from_integer(0.into())),
            _ => (Rational::from_integer(0.into()), -mag.clone()),
        };
        assert_eq!((c[k].re.clone(), c[k].im.clone()), (re, im), "k = {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Exact and floating routes agree, and the rational recursion does not
    /// depend on how the rational is written.
    #[test]
    fn moment_routes_agree(num in 76i64..=100, scale in 1i64..5) {
        let exact = moment_recursion(&Prob::from_ratio(num * scale, 100 * scale), 12).unwrap();
        let reduced = moment_recursion(&Prob::from_ratio(num, 100), 12).unwrap();
        prop_assert_eq!(&exact.r, &reduced.r);
        let float = moment_table::<f64>(&Prob::from_ratio(num, 100), 12).unwrap();
        for n in 1..=12 {
            let e = merw_core::scalar::rational_to_f64(&exact.r[n]);
            prop_assert!((float.r[n] / e - 1.0).abs() < 1e-10);
        }
    }

    /// Series parity: `φ(-x) = conj φ(x)`.
    #[test]
    fn series_parity(num in 85i64..=100, x in 0.0f64..0.3) {
        let p = Prob::from_ratio(num, 100);
        let a = charfun_series(&p, x, 40, SeriesTarget::W).unwrap().value();
        let b = charfun_series(&p, -x, 40, SeriesTarget::W).unwrap().value();
        prop_assert!((a - b.conj()).norm() < 1e-14);
    }
}

/// The ODE characteristic function at d = 2 against the empirical one of
/// simulated `ŵ`.
#[test]
fn d2_charfun_matches_monte_carlo() {
    let prm = params(2, 4, 5);
    let g = integrate_charfun_ode(&prm, 2.0, 0.25, &CharFunOdeOptions::default()).unwrap();
    let w = sample_w(&prm, 4000, 4000, 3, 0).unwrap();
    for k in g.origin()..g.len() {
        let x = g.x[k];
        let (c, s) = w.iter().fold((0.0, 0.0), |(c, s), &v| (c + (x * v).cos(), s + (x * v).sin()));
        let (c, s) = (c / w.len() as f64, s / w.len() as f64);
        // Sampling s.e. is at most 1/√4000 ≈ 0.016 per component, plus horizon bias.
        assert!((c - g.f[k]).abs() < 0.06 && (s - g.g[k]).abs() < 0.06, "x = {x}: ({c}, {s}) vs ({}, {})", g.f[k], g.g[k]);
    }
}
