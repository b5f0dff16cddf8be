//! The acceptance suite at desk scale: one line per criterion.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use merw_core::coupling::{couple_erw_pair, couple_merw_derw, verify_dominance, DominanceRegime};
use merw_core::limit::{
    charfun_series_grid, density_fourier_inversion, integrate_charfun_ode, moment_recursion, verify_moment_bound,
    y5_closed_form, CharFunGrid, CharFunOdeOptions, DensityOptions,
};
use merw_core::stats::{
    exit_time_ensemble, ks_one_sample, log_checkpoints, log_norm_exponent_ensemble, martingale_residuals,
    msd_empirical, normalized_cdf_distance, rate_of_escape_check, try_run_replicas, zero_counts,
    MeanSe, ReplicaEnsemble, EXIT_CAP,
};
use merw_core::urn::{run_xi, sample_w, simulate_urn_continuous, simulate_urn_discrete};
use merw_core::walk::{critical_p, derived_constants, Prob, WalkParams};
use merw_core::Rational;

use crate::config::{Command, LimitCommand, Settings, StatsCommand};
use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 20_241_016;

#[derive(Clone, Debug, Default)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub workers: usize,
    pub filter: Option<String>,
}

impl AcceptanceConfig {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self { seed, workers, filter: None }
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    run: fn(&AcceptanceConfig) -> CliResult<Check>,
}

pub struct Check {
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:02} {:<20} {}", self.id, self.name, self.detail)
    }
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "msd-oracle", run: msd_oracle },
        Criterion { id: 2, name: "regime-constants", run: regime_constants },
        Criterion { id: 3, name: "coupling-dominance", run: coupling_dominance },
        Criterion { id: 4, name: "urn-embedding", run: urn_embedding },
        Criterion { id: 5, name: "xi-exponential", run: xi_exponential },
        Criterion { id: 6, name: "moment-golden", run: moment_golden },
        Criterion { id: 7, name: "charfun", run: charfun },
        Criterion { id: 8, name: "density-recovery", run: density_recovery },
        Criterion { id: 9, name: "berry-esseen", run: berry_esseen },
        Criterion { id: 10, name: "exit-times", run: exit_times },
        Criterion { id: 11, name: "transience", run: transience },
        Criterion { id: 12, name: "critical-exponent", run: critical_exponent },
        Criterion { id: 13, name: "martingale-residuals", run: martingale },
        Criterion { id: 14, name: "determinism", run: determinism },
    ]
}

impl Criterion {
    /// Matches the number (`7`, `07`) or a substring of the name.
    pub fn matches(&self, filter: &str) -> bool {
        filter.parse::<u8>().map(|k| k == self.id).unwrap_or(false) || self.name.contains(filter)
    }
}

/// Runs the selected criteria, writing one line each and a summary line to
/// `out`. Timings go to stderr.
pub fn verify_all<W: Write>(cfg: &AcceptanceConfig, out: &mut W) -> CliResult<Vec<Line>> {
    let selected: Vec<Criterion> =
        criteria().into_iter().filter(|c| cfg.filter.as_deref().is_none_or(|f| c.matches(f))).collect();
    if selected.is_empty() {
        return Err(CliError::Config(format!("no criterion matches {:?}", cfg.filter.as_deref().unwrap_or(""))));
    }
    let mut lines = Vec::new();
    for c in selected {
        let start = Instant::now();
        let check = (c.run)(cfg).unwrap_or_else(|e| Check { pass: false, detail: format!("error: {e}") });
        let line = Line { id: c.id, name: c.name, pass: check.pass, detail: check.detail };
        writeln!(out, "{line}")?;
        out.flush()?;
        eprintln!("  [{:02} took {:.1} s]", c.id, start.elapsed().as_secs_f64());
        lines.push(line);
    }
    let failed: Vec<String> = lines.iter().filter(|l| !l.pass).map(|l| l.id.to_string()).collect();
    let passed = lines.len() - failed.len();
    if failed.is_empty() {
        writeln!(out, "summary: {passed}/{} passed", lines.len())?;
    } else {
        writeln!(out, "summary: {passed}/{} passed; failed: {}", lines.len(), failed.join(", "))?;
    }
    Ok(lines)
}

fn prob(s: &str) -> Prob {
    Prob::from_str(s).expect("literal probability")
}

fn params(d: usize, p: &str) -> CliResult<WalkParams> {
    Ok(WalkParams::new(d, prob(p))?)
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn msd_oracle(cfg: &AcceptanceConfig) -> CliResult<Check> {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (d, p) in [(1, "1/2"), (2, "1/2"), (2, "5/8"), (3, "4/5")] {
        let ens = ReplicaEnsemble::new(params(d, p)?, 1000, cfg.seed, log_checkpoints(10, 10_000, 8))?
            .with_workers(cfg.workers);
        let rep = msd_empirical(&ens)?;
        pass &= rep.pass;
        for pt in &rep.points {
            worst = worst.max(pt.empirical.z(pt.exact).abs());
            points += 1;
        }
    }
    Ok(Check { pass, detail: format!("worst |z| = {worst:.2} over {points} checkpoints (limit 4)") })
}

fn regime_constants(_: &AcceptanceConfig) -> CliResult<Check> {
    let a = derived_constants::<Rational>(&params(2, "5/8")?).a;
    let pd: Vec<Rational> = (1..=3).map(critical_p).collect();
    let from_params: Vec<Rational> =
        (1..=3).map(|d| derived_constants::<Rational>(&params(d, "1/2").unwrap()).p_d).collect();
    let expect = vec![q(3, 4), q(5, 8), q(7, 12)];
    let pass = a == q(1, 2) && pd == expect && from_params == expect;
    Ok(Check {
        pass,
        detail: format!("a(2,5/8) = {a}; p_d = {}, {}, {}", pd[0], pd[1], pd[2]),
    })
}

fn coupling_dominance(cfg: &AcceptanceConfig) -> CliResult<Check> {
    const SEEDS: u64 = 100;
    const N: u64 = 10_000;
    let mut violations = 0u64;
    let mut runs = 0u64;
    let mut wrong_regime = Vec::new();
    for (p1, p2) in [("0", "1"), ("1/4", "3/4"), ("1/2", "9/10"), ("3/5", "4/5")] {
        let counts = try_run_replicas(SEEDS, cfg.workers, |s| {
            couple_erw_pair(&prob(p1), &prob(p2), N, cfg.seed.wrapping_add(s)).map(|r| r.2.violation_count)
        })?;
        violations += counts.iter().sum::<u64>();
        runs += SEEDS;
    }
    let bundles: [(usize, &str, [&str; 2], &[DominanceRegime]); 4] = [
        (3, "1/6", ["0", "1/2"], &[DominanceRegime::MerwSandwichLowP]),
        (2, "9/10", ["1/2", "27/28"], &[DominanceRegime::MerwSandwichHighP]),
        (2, "1/2", ["3/10", "4/5"], &[DominanceRegime::DerwMonotone]),
        (3, "2/5", ["1/5", "9/10"], &[DominanceRegime::DerwMonotone]),
    ];
    for (d, p, qs, regimes) in bundles {
        let q_list = [prob(qs[0]), prob(qs[1])];
        let reports = try_run_replicas(SEEDS, cfg.workers, |r| {
            couple_merw_derw(d, &prob(p), &q_list, N, cfg.seed, r).map(|b| verify_dominance(&b))
        })?;
        for rep in &reports {
            violations += rep.violation_count;
            if !regimes.contains(&rep.regime) {
                wrong_regime.push(format!("d={d} p={p}: {:?}", rep.regime));
            }
        }
        runs += SEEDS;
    }
    wrong_regime.dedup();
    let mut detail = format!("{violations} violations over {runs} coupled runs of {N} steps");
    if !wrong_regime.is_empty() {
        detail.push_str(&format!("; unexpected regimes: {}", wrong_regime.join(", ")));
    }
    Ok(Check { pass: violations == 0 && wrong_regime.is_empty(), detail })
}

fn urn_embedding(cfg: &AcceptanceConfig) -> CliResult<Check> {
    let mut mismatches = 0;
    let mut paths = 0;
    for d in 1..=3 {
        let prm = params(d, "7/10")?;
        let diffs = try_run_replicas(20, cfg.workers, |r| {
            let disc = simulate_urn_discrete(&prm, 1000, cfg.seed, r)?;
            let cont = simulate_urn_continuous(&prm, 1000, cfg.seed, r)?;
            Ok((0..disc.len()).filter(|&k| disc.composition(k) != cont.composition(k)).count())
        })?;
        mismatches += diffs.iter().sum::<usize>();
        paths += diffs.len();
    }
    const RUNS: u64 = 100_000;
    let prm = params(2, "9/10")?;
    let gaps = try_run_replicas(RUNS, cfg.workers, |r| {
        let run = simulate_urn_continuous(&prm, 11, cfg.seed, r)?;
        Ok((0..=10).map(|k| (k + 1) as f64 * (run.jump_times[k + 1] - run.jump_times[k])).collect::<Vec<_>>())
    })?;
    let mut worst: f64 = 0.0;
    let mut rates_ok = true;
    for k in 0..=10 {
        let m = MeanSe::of(&gaps.iter().map(|g| g[k]).collect::<Vec<_>>());
        rates_ok &= m.within(1.0, 3.0, 0.0);
        worst = worst.max(m.z(1.0).abs());
    }
    Ok(Check {
        pass: mismatches == 0 && rates_ok,
        detail: format!(
            "skeleton mismatches {mismatches} over {paths} paths; scaled holding times worst |z| = {worst:.2} (limit 3)"
        ),
    })
}

fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

fn xi_exponential(cfg: &AcceptanceConfig) -> CliResult<Check> {
    const R: u64 = 10_000;
    let prm = params(1, "9/10")?;
    let xi = try_run_replicas(R, cfg.workers, |r| run_xi(&prm, 100_000, cfg.seed, r))?;
    let ks = ks_one_sample(&xi, exp1_cdf);
    let threshold = 1.63 / 100.0 + 0.02;
    Ok(Check { pass: ks < threshold, detail: format!("KS = {ks:.4} (limit {threshold:.4})") })
}

fn moment_golden(_: &AcceptanceConfig) -> CliResult<Check> {
    let t = moment_recursion(&prob("1"), 10)?;
    let mut f = q(1, 1);
    let mut factorial_ok = true;
    for n in 1..=10 {
        f *= q(n as i64, 1);
        factorial_ok &= t.r[n] == f;
    }
    let t = moment_recursion(&prob("4/5"), 10)?;
    let rel = (t.y[5] / y5_closed_form(0.8) - 1.0).abs();
    let mut held = Vec::new();
    let mut failed = Vec::new();
    for p in ["19/25", "4/5", "9/10", "1"] {
        let rep = verify_moment_bound(&moment_recursion(&prob(p), 60)?);
        match rep.first_violation {
            None => held.push(p.to_string()),
            Some(n) => failed.push(format!("{p} (first n = {n})")),
        }
    }
    let mut detail = format!(
        "r_n = n! {}; E Y^5 rel err {rel:.1e}; bound holds at p = {}",
        if factorial_ok { "ok" } else { "WRONG" },
        if held.is_empty() { "none".into() } else { held.join(", ") }
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; bound violated at p = {}", failed.join(", ")));
    }
    Ok(Check { pass: factorial_ok && rel < 1e-10 && failed.is_empty(), detail })
}

fn max_diff(a: &CharFunGrid, b: &CharFunGrid) -> f64 {
    (0..a.len()).map(|k| (a.value(k) - b.value(k)).norm()).fold(0.0, f64::max)
}

fn charfun(_: &AcceptanceConfig) -> CliResult<Check> {
    let opts = CharFunOdeOptions::default();
    let exp = integrate_charfun_ode(&params(1, "1")?, 50.0, 0.05, &opts)?;
    let mut modulus_ok = exp.check(1e-8).is_ok();
    let exact_err = (exp.origin()..exp.len())
        .map(|k| {
            let x = exp.x[k];
            let den = 1.0 + x * x;
            (exp.f[k] - 1.0 / den).hypot(exp.g[k] - x / den)
        })
        .fold(0.0, f64::max);
    let mut pass = exact_err < 1e-8;
    let mut parts = vec![format!("p=1 vs 1/(1-ix) {exact_err:.1e}")];
    for p in ["4/5", "9/10"] {
        let pf = prob(p).value();
        let window = 0.8 * (2.0 * pf - 1.0) / pf;
        let step = window / 40.0;
        let ode = integrate_charfun_ode(&params(1, p)?, window, step, &opts)?;
        let series = charfun_series_grid(&prob(p), window, step, 120)?;
        modulus_ok &= ode.check(1e-8).is_ok();
        let diff = max_diff(&ode, &series);
        pass &= diff < 1e-6;
        parts.push(format!("p={p} series/ODE {diff:.1e}"));
    }
    parts.push(format!("|phi| <= 1+1e-8 {}", if modulus_ok { "ok" } else { "VIOLATED" }));
    Ok(Check { pass: pass && modulus_ok, detail: parts.join("; ") })
}

fn density_recovery(cfg: &AcceptanceConfig) -> CliResult<Check> {
    let opts = CharFunOdeOptions::default();
    let dopts = DensityOptions::default();
    let grid = integrate_charfun_ode(&params(1, "1")?, 2000.0, 0.05, &opts)?;
    let est = density_fourier_inversion(&grid, &dopts)?;
    let l1: f64 = est
        .x
        .iter()
        .zip(&est.pw)
        .filter(|(x, _)| (-1.0..=10.0).contains(*x) && x.abs() >= 0.1)
        .map(|(&x, &pw)| (pw - if x > 0.0 { (-x).exp() } else { 0.0 }).abs() * dopts.dx)
        .sum();
    let mass_ok = (0.98..=1.02).contains(&est.mass);
    let prm = params(1, "9/10")?;
    let grid = integrate_charfun_ode(&prm, 2000.0, 0.05, &opts)?;
    let est9 = density_fourier_inversion(&grid, &dopts)?;
    let sample = sample_w(&prm, 10_000, 10_000, cfg.seed, cfg.workers)?;
    let ks = ks_one_sample(&sample, est9.cdf_fn());
    Ok(Check {
        pass: l1 < 0.02 && mass_ok && ks < 0.05,
        detail: format!(
            "p=1 L1 {l1:.4} (limit 0.02), mass {:.4}; p=0.9 KS to Monte Carlo {ks:.4} (limit 0.05), mass {:.4}",
            est.mass, est9.mass
        ),
    })
}

fn berry_esseen(cfg: &AcceptanceConfig) -> CliResult<Check> {
    const R: u64 = 100_000;
    let ens = ReplicaEnsemble::new(params(1, "1/2")?, R, cfg.seed, vec![10_000])?.with_workers(cfg.workers);
    let dist = normalized_cdf_distance(&ens)?.distance[0];
    let threshold = 0.01 + 1.63 / (R as f64).sqrt();
    let ens = ReplicaEnsemble::new(params(1, "3/4")?, 20_000, cfg.seed, vec![1000, 10_000, 100_000])?
        .with_workers(cfg.workers);
    let rep = normalized_cdf_distance(&ens)?;
    let trend: Vec<String> = rep.distance.iter().map(|x| format!("{x:.4}")).collect();
    Ok(Check {
        pass: dist < threshold && rep.strictly_decreasing(),
        detail: format!(
            "p=1/2 distance {dist:.4} (limit {threshold:.4}); p=3/4 distances {} (must decrease)",
            trend.join(" > ")
        ),
    })
}

fn exit_times(cfg: &AcceptanceConfig) -> CliResult<Check> {
    const R: u64 = 10_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, p) in [(1, "1/2"), (2, "1/2"), (3, "9/10")] {
        let prm = params(d, p)?;
        let mut zs = Vec::new();
        for m in [5, 10, 20] {
            let rep = exit_time_ensemble(&prm, m, R, cfg.seed, cfg.workers, EXIT_CAP)?;
            pass &= rep.bound_ok && rep.gamblers_ruin.unwrap_or(true) && rep.censored == 0;
            zs.push(match rep.gamblers_ruin {
                Some(_) => format!("m={m}: z={:.2}", rep.mean.z((m * m) as f64)),
                None => format!("m={m}: {:.0}/{:.0}", rep.mean.mean, rep.universal_bound),
            });
        }
        parts.push(format!("d={d} p={p} [{}]", zs.join(", ")));
    }
    Ok(Check { pass, detail: parts.join("; ") })
}

fn transience(cfg: &AcceptanceConfig) -> CliResult<Check> {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in ["3/10", "3/5"] {
        let prm = params(3, p)?;
        let ens = ReplicaEnsemble::new(prm.clone(), 100, cfg.seed, vec![1_000_000])?.with_workers(cfg.workers);
        let res = ens.map(|w| rate_of_escape_check(w, 0.1, 1_000_000))?;
        let settled = res.iter().filter(|r| r.last_violation.is_none_or(|n| n < 10_000)).count() as f64 / 100.0;
        let ens = ReplicaEnsemble::new(prm, 1000, cfg.seed, vec![10_000, 100_000])?.with_workers(cfg.workers);
        let zeros = zero_counts(&ens)?;
        pass &= settled >= 0.95 && zeros.last_change.abs() < 0.05;
        parts.push(format!("p={p}: settled {settled:.2} (min 0.95), zero-count change {:.4} (max 0.05)", zeros.last_change));
    }
    Ok(Check { pass, detail: parts.join("; ") })
}

fn critical_exponent(cfg: &AcceptanceConfig) -> CliResult<Check> {
    let ens = ReplicaEnsemble::new(params(2, "5/8")?, 200, cfg.seed, vec![1_000_000])?.with_workers(cfg.workers);
    let rep = log_norm_exponent_ensemble(&ens)?;
    let m = rep.medians[0];
    Ok(Check { pass: (0.9..=1.05).contains(&m), detail: format!("median {m:.4} (band [0.9, 1.05])") })
}

fn martingale(cfg: &AcceptanceConfig) -> CliResult<Check> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, p) in [(2, "3/5"), (1, "1/4"), (1, "0")] {
        let ens = ReplicaEnsemble::new(params(d, p)?, 20_000, cfg.seed, vec![1, 2, 3, 10, 100, 1000])?
            .with_workers(cfg.workers);
        let rep = martingale_residuals(&ens)?;
        pass &= rep.pass;
        let mut worst: f64 = rep.m_start.z(0.0).abs();
        for r in &rep.rows {
            for m in r.s_bar.iter().chain(r.m.iter()).chain(std::iter::once(&r.n_mart)) {
                if m.se > 0.0 {
                    worst = worst.max(m.z(0.0).abs());
                }
            }
        }
        parts.push(format!("d={d} p={p} ({:?}) worst |z| {worst:.2}", rep.weights.case));
    }
    Ok(Check { pass, detail: format!("{} (limit 4)", parts.join("; ")) })
}

fn scratch_dir(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("merw-lab-verify-{}-{tag}", std::process::id()))
}

fn determinism(cfg: &AcceptanceConfig) -> CliResult<Check> {
    let settings = |d: usize, p: &str, q: &[&str], n: u64, replicas: u64| Settings {
        d: Some(d),
        p: Some(prob(p)),
        q: q.iter().map(|s| prob(s)).collect(),
        n: Some(n),
        replicas: Some(replicas),
        seed: Some(cfg.seed),
        stride: Some(10),
        ..Default::default()
    };
    let cases: Vec<(Command, Settings)> = vec![
        (Command::Simulate, settings(2, "1/2", &[], 10_000, 4)),
        (Command::Couple, settings(3, "1/6", &["0", "1/2"], 1000, 8)),
        (Command::Urn, settings(1, "9/10", &[], 1000, 50)),
        (Command::Limit(LimitCommand::Charfun), Settings { x_max: Some(20.0), ..settings(2, "4/5", &[], 1, 1) }),
        (Command::Stats(StatsCommand::Msd), settings(2, "5/8", &[], 1000, 200)),
        (Command::Stats(StatsCommand::Martingale), settings(1, "1/4", &[], 100, 500)),
        (Command::Stats(StatsCommand::Zeros), settings(3, "3/10", &[], 2000, 100)),
    ];
    let mut differing = Vec::new();
    for (k, (cmd, s)) in cases.iter().enumerate() {
        let mut manifests = Vec::new();
        for workers in [1, 2] {
            let dir = scratch_dir(&format!("{k}-{workers}"));
            let run = Settings { workers, out: Some(dir.clone()), ..s.clone() };
            let result = crate::execute(*cmd, &run);
            let _ = std::fs::remove_dir_all(&dir);
            manifests.push(result?.manifest);
        }
        if manifests[0] != manifests[1] {
            differing.push(cmd.name());
        }
    }
    let detail = if differing.is_empty() {
        format!("{} commands, manifests identical at 1 and 2 workers", cases.len())
    } else {
        format!("manifests differ for {}", differing.join(", "))
    };
    Ok(Check { pass: differing.is_empty(), detail })
}
