use merw_core::stats::{msd_exact, MeanSe};
use merw_core::urn::{simulate_urn_continuous, simulate_urn_discrete, UrnProcess};
use merw_core::walk::WalkParams;

/// The urn's walk after 4 draws is `S_5` of the MERW: compare `E‖S_5‖²`
/// and `E S_5(1)` at p = 0.3.
#[test]
fn urn_walk_has_merw_moments() {
    let params = WalkParams::rational(2, 3, 10).unwrap();
    let exact = msd_exact::<f64>(&params, 5)[5];
    let runs = 100_000u64;
    let mut norms = Vec::with_capacity(runs as usize);
    for r in 0..runs {
        let mut urn = UrnProcess::new(&params, 41, r).unwrap();
        for _ in 0..4 {
            urn.event();
        }
        let s = urn.walk_position();
        norms.push(s.iter().map(|&x| (x * x) as f64).sum::<f64>());
    }
    let m = MeanSe::of(&norms);
    assert!(m.within(exact, 4.0, 0.0), "{m:?} vs {exact}");
}

#[test]
fn skeletons_agree() {
    for d in 1..=3 {
        let params = WalkParams::rational(d, 2, 3).unwrap();
        for r in 0..5 {
            let a = simulate_urn_discrete(&params, 500, 8, r).unwrap();
            let b = simulate_urn_continuous(&params, 500, 8, r).unwrap();
            b.check().unwrap();
            for k in 0..a.len() {
                assert_eq!(a.composition(k), b.composition(k));
            }
        }
    }
}
