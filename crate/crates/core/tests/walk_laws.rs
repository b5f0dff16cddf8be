//! Step-law invariants in exact arithmetic, against the elephant definition:
//! pick a past step uniformly, repeat it with probability p, otherwise take
//! one of the other 2d - 1 directions uniformly.

use merw_core::stats::msd_exact;
use merw_core::walk::{merw_step_distribution, simulate, Prob, SignedAxis, WalkParams, WalkState, Walker};
use merw_core::Rational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn elephant_law(state: &WalkState, p: &Rational) -> Vec<Rational> {
    let d = state.d();
    let n = q(state.n as i64, 1);
    let other = (Rational::one() - p) / q(2 * d as i64 - 1, 1);
    state
        .dir_counts
        .iter()
        .map(|&c| {
            let f = q(c as i64, 1) / &n;
            &f * p + (Rational::one() - &f) * &other
        })
        .collect()
}

fn random_state(d: usize, steps: &[usize]) -> WalkState {
    let mut s = WalkState::initial(d, SignedAxis::E1);
    for &k in steps {
        s.push(k % (2 * d));
    }
    s
}

proptest! {
    #[test]
    fn law_matches_definition_and_sums_to_one(
        d in 1usize..5,
        num in 0i64..=20,
        steps in proptest::collection::vec(0usize..10, 0..40),
    ) {
        let p = q(num, 20);
        let params = WalkParams::new(d, Prob::from_rational(p.clone())).unwrap();
        let state = random_state(d, &steps);
        let law = merw_step_distribution::<Rational>(&state, &params).unwrap();
        prop_assert_eq!(&law.probs, &elephant_law(&state, &p));
        prop_assert_eq!(law.probs.iter().fold(Rational::zero(), |a, b| a + b), Rational::one());
        prop_assert!(law.probs.iter().all(|x| *x >= Rational::zero()));
    }

    #[test]
    fn uniform_at_one_over_2d(d in 1usize..5, steps in proptest::collection::vec(0usize..10, 0..40)) {
        let params = WalkParams::new(d, Prob::from_rational(q(1, 2 * d as i64))).unwrap();
        let law = merw_step_distribution::<Rational>(&random_state(d, &steps), &params).unwrap();
        prop_assert!(law.probs.iter().all(|x| *x == q(1, 2 * d as i64)));
    }

    #[test]
    fn bookkeeping_and_determinism(d in 1usize..4, num in 0i64..=10, seed in any::<u64>(), stream in 0u64..1000) {
        let params = WalkParams::new(d, Prob::from_rational(q(num, 10))).unwrap();
        let mut w = Walker::new(&params, seed, stream).unwrap();
        w.run_to(300);
        let s = w.state();
        prop_assert_eq!(s.n, 300);
        prop_assert_eq!(s.dir_counts.iter().sum::<u64>(), 300);
        prop_assert_eq!(s.axis_counts.iter().sum::<u64>(), 300);
        for i in 0..d {
            prop_assert_eq!(s.position[i], s.dir_counts[2 * i] as i64 - s.dir_counts[2 * i + 1] as i64);
            prop_assert_eq!(s.axis_counts[i], s.dir_counts[2 * i] + s.dir_counts[2 * i + 1]);
        }
        let mut again = Walker::new(&params, seed, stream).unwrap();
        again.run_to(300);
        prop_assert_eq!(again.state(), s);
        let t = simulate(&params, 300, seed, stream, 1).unwrap();
        prop_assert_eq!(&t.final_state, s);
        t.check_steps().unwrap();
    }
}

/// `E‖S_n‖²` by summing over every path of length `n` with its exact
/// probability, compared with the recursion.
#[test]
fn brute_force_msd_small_n() {
    fn walk(state: &WalkState, prob: Rational, params: &WalkParams, n: u64, acc: &mut Rational) {
        if state.n == n {
            *acc += prob * q(state.norm2() as i64, 1);
            return;
        }
        let law = merw_step_distribution::<Rational>(state, params).unwrap();
        for (k, pk) in law.probs.iter().enumerate() {
            if !pk.is_zero() {
                let mut next = state.clone();
                next.push(k);
                walk(&next, &prob * pk, params, n, acc);
            }
        }
    }
    for (d, num, den) in [(1, 1, 3), (1, 3, 4), (2, 5, 8), (2, 1, 7), (3, 9, 10)] {
        let params = WalkParams::rational(d, num, den).unwrap();
        let exact = msd_exact::<Rational>(&params, 5);
        for n in 1..=5 {
            let mut acc = Rational::zero();
            walk(&WalkState::initial(d, SignedAxis::E1), Rational::one(), &params, n, &mut acc);
            assert_eq!(acc, exact[n as usize], "d = {d}, p = {num}/{den}, n = {n}");
        }
    }
}

/// Empirical law of the second step against the exact law, by chi-square.
#[test]
fn second_step_chi_square() {
    let params = WalkParams::rational(2, 7, 10).unwrap();
    let law = merw_step_distribution::<f64>(&WalkState::initial(2, SignedAxis::E1), &params).unwrap();
    let runs = 100_000u64;
    let mut counts = [0u64; 4];
    for r in 0..runs {
        let mut w = Walker::new(&params, 99, r).unwrap();
        counts[w.step()] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&law.probs)
        .map(|(&c, &p)| {
            let e = p * runs as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 3 degrees of freedom; the 0.999 quantile is 16.27.
    assert!(chi2 < 16.27, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn trajectory_files_replay_bit_identically() {
    let params = WalkParams::rational(3, 2, 3).unwrap();
    let t = simulate(&params, 2000, 5, 17, 1).unwrap();
    let mut csv = Vec::new();
    t.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let side: serde_json::Value = serde_json::from_str(&t.sidecar_json().to_string()).unwrap();
    let back = merw_core::walk::Trajectory::from_csv(&text, &side).unwrap();
    assert_eq!(back, t);
    let states = back.replay().unwrap();
    assert_eq!(states.last().unwrap(), &t.final_state);
}
