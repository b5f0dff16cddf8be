//! Subcommand bodies. Each fills an output directory and reports whether its
//! check passed.

use merw_core::coupling::{couple_erw_pair, couple_merw_derw, verify_dominance, DominanceReport};
use merw_core::limit::{
    charfun_series_grid, density_fourier_inversion, integrate_charfun_ode, moment_recursion, tail_exponent_check,
    verify_moment_bound, y5_closed_form, CharFunGrid, CharFunOdeOptions, DensityOptions, DEFAULT_ORDER,
};
use merw_core::stats::{
    axis_occupation_error, direction_series, exit_time_ensemble, lil_band, log_checkpoints, log_norm_exponent_ensemble,
    lyapunov_drift_probe, martingale_residuals, msd_empirical, normalized_cdf_distance, rate_of_escape_check,
    try_run_replicas, zero_counts, DriftOptions, ReplicaEnsemble, StatCurve, Verdict, EXIT_CAP,
};
use merw_core::stats::ks::ks_one_sample;
use merw_core::stats::reduce::{median, MeanSe};
use merw_core::urn::{run_limits, run_xi, simulate_urn_continuous};
use merw_core::walk::{critical_p, memory_exponent, regime, simulate, Regime, WalkParams};
use serde_json::json;

use crate::config::{ExperimentConfig, LimitCommand, Settings, StatsCommand};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

pub const STREAM_ALLOCATION: &str = "replica r draws from stream id r of the master seed";

pub struct Outcome {
    pub config: ExperimentConfig,
    pub pass: bool,
    pub summary: String,
}

fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

fn base_config(s: &Settings, params: Option<&WalkParams>) -> ExperimentConfig {
    ExperimentConfig {
        d: params.map(|p| p.d),
        p: params.map(|p| p.p.clone()),
        q: s.q.clone(),
        master_seed: Some(s.seed()),
        ..Default::default()
    }
}

pub fn simulate_cmd(s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    let mut params = s.params()?;
    if let Some(q) = s.q.first() {
        params = params.with_q(q.clone())?;
    }
    let n = s.n.unwrap_or(1000);
    let replicas = s.replicas.unwrap_or(1);
    let stride = s.stride.unwrap_or((n / 10_000).max(1));
    let seed = s.seed();
    let trajs = try_run_replicas(replicas, s.workers, |r| simulate(&params, n, seed, r, stride))?;
    let mut finals = Vec::new();
    for (r, t) in trajs.iter().enumerate() {
        out.csv(&format!("traj_r{r}.csv"), |w| t.write_csv(w))?;
        out.json(&format!("traj_r{r}.json"), &t.sidecar_json())?;
        finals.push(t.final_state.position.clone());
    }
    out.json(
        "simulate.json",
        &json!({ "params": params, "master_seed": seed, "replicas": replicas, "stride": stride,
                 "stream_allocation": STREAM_ALLOCATION, "final_positions": finals }),
    )?;
    let mut config = base_config(s, Some(&params));
    config.n_max = Some(n);
    config.replicas = Some(replicas);
    config.extra.insert("stride".into(), json!(stride));
    Ok(Outcome { config, pass: true, summary: format!("{replicas} trajectories of {n} steps") })
}

pub fn couple_cmd(s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    let n = s.n.unwrap_or(10_000);
    let replicas = s.replicas.unwrap_or(1);
    let seed = s.seed();
    let p = s.p()?;
    let mut config;
    let reports: Vec<DominanceReport>;
    if s.erw_pair {
        let p2 = s.q.first().ok_or_else(|| CliError::Config("--erw-pair needs --q".into()))?.clone();
        // Replica r uses seed + r: the pair coupling lives on stream 0.
        let runs = try_run_replicas(replicas, s.workers, |r| couple_erw_pair(&p, &p2, n, seed.wrapping_add(r)))?;
        out.csv("erw_p1.csv", |w| runs[0].0.write_csv(w))?;
        out.csv("erw_p2.csv", |w| runs[0].1.write_csv(w))?;
        reports = runs.into_iter().map(|r| r.2).collect();
        config = base_config(s, None);
        config.d = Some(1);
        config.p = Some(p.clone());
        config.extra.insert("erw_pair".into(), json!(true));
    } else {
        let d = s.d() as usize;
        if s.q.is_empty() {
            return Err(CliError::Config("couple needs --q".into()));
        }
        let bundles = try_run_replicas(replicas, s.workers, |r| couple_merw_derw(d, &p, &s.q, n, seed, r))?;
        let b = &bundles[0];
        b.check_shared_axes()?;
        out.csv("merw.csv", |w| b.merw.write_csv(w))?;
        for (k, t) in b.derw.iter().enumerate() {
            out.csv(&format!("derw_q{}.csv", k + 1), |w| t.write_csv(w))?;
        }
        out.csv("b_counts.csv", |w| b.write_b_counts_csv(w))?;
        reports = bundles.iter().map(verify_dominance).collect();
        config = base_config(s, Some(&WalkParams::new(d, p.clone())?));
    }
    let total: u64 = reports.iter().map(|r| r.violation_count).sum();
    let regime = reports[0].regime;
    let covered = regime != merw_core::coupling::DominanceRegime::NotCovered;
    out.json(
        "dominance.json",
        &json!({ "regime": regime, "replicas": replicas, "n_max": n, "total_violations": total,
                 "reports": reports }),
    )?;
    config.n_max = Some(n);
    config.replicas = Some(replicas);
    Ok(Outcome {
        config,
        pass: covered && total == 0,
        summary: format!("regime {regime:?}, {total} violations over {replicas} runs"),
    })
}

pub fn urn_cmd(s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    let params = s.params()?;
    let n = s.n.unwrap_or(10_000);
    let replicas = s.replicas.unwrap_or(100);
    let seed = s.seed();
    let path = simulate_urn_continuous(&params, n.min(100_000), seed, 0)?;
    path.check()?;
    out.csv("urn_path.csv", |w| path.write_csv(w))?;
    let superdiffusive = regime(&params) == Regime::Superdiffusive;
    let mut xi = Vec::with_capacity(replicas as usize);
    let mut csv = String::new();
    if superdiffusive {
        let est = try_run_replicas(replicas, s.workers, |r| run_limits(&params, n, seed, r))?;
        csv.push_str("replica,xi_hat,w_hat\n");
        for (r, e) in est.iter().enumerate() {
            csv.push_str(&format!("{r},{:.17e},{:.17e}\n", e.xi_hat, e.w_sum));
            xi.push(e.xi_hat);
        }
    } else {
        xi = try_run_replicas(replicas, s.workers, |r| run_xi(&params, n, seed, r))?;
        csv.push_str("replica,xi_hat\n");
        for (r, x) in xi.iter().enumerate() {
            csv.push_str(&format!("{r},{x:.17e}\n"));
        }
    }
    out.write("limits.csv", csv.as_bytes())?;
    let ks = ks_one_sample(&xi, exp1_cdf);
    let threshold = 1.63 / (replicas as f64).sqrt() + 0.02;
    let pass = ks < threshold;
    out.json(
        "urn.json",
        &Verdict::new(
            "xi_exp1_ks",
            &params,
            pass,
            json!({ "ks": ks, "threshold": threshold, "mean_xi": MeanSe::of(&xi), "horizon": n,
                    "stream_allocation": STREAM_ALLOCATION }),
        ),
    )?;
    let mut config = base_config(s, Some(&params));
    config.n_max = Some(n);
    config.replicas = Some(replicas);
    Ok(Outcome { config, pass, summary: format!("KS(xi, Exp(1)) = {ks:.4} (threshold {threshold:.4})") })
}

pub fn limit_cmd(which: LimitCommand, s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    match which {
        LimitCommand::Moments => moments_cmd(s, out),
        LimitCommand::Charfun => charfun_cmd(s, out),
        LimitCommand::Density => density_cmd(s, out),
    }
}

fn moments_cmd(s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    let p = s.p()?;
    let order = s.order.unwrap_or(DEFAULT_ORDER);
    let table = moment_recursion(&p, order)?;
    out.csv("moments.csv", |w| table.write_csv(w))?;
    let bound = verify_moment_bound(&table);
    let golden = (order >= 5).then(|| {
        let closed = y5_closed_form(p.value());
        let rel = (table.y[5] / closed - 1.0).abs();
        json!({ "recursion": table.y[5], "closed_form": closed, "relative_error": rel, "pass": rel < 1e-10 })
    });
    let golden_ok = golden.as_ref().is_none_or(|g| g["pass"] == json!(true));
    out.json("moments.json", &json!({ "p": p, "order": order, "y5_golden": golden, "bound": bound }))?;
    let mut config = ExperimentConfig { p: Some(p), ..Default::default() };
    config.extra.insert("order".into(), json!(order));
    let summary = match bound.first_violation {
        Some(n) => format!("golden {}, bound violated first at n = {n}", if golden_ok { "ok" } else { "FAILED" }),
        None => format!("golden {}, bound holds to n = {order}", if golden_ok { "ok" } else { "FAILED" }),
    };
    Ok(Outcome { config, pass: golden_ok && bound.holds, summary })
}

fn charfun_grid(s: &Settings, x_max: f64, step: f64) -> CliResult<CharFunGrid> {
    let params = s.params()?;
    Ok(match s.method.as_deref().unwrap_or("ode") {
        "ode" => integrate_charfun_ode(&params, x_max, step, &CharFunOdeOptions::default())?,
        "series" => {
            if params.d != 1 {
                return Err(CliError::Config("the series method is for d = 1".into()));
            }
            charfun_series_grid(&params.p, x_max, step, s.order.unwrap_or(DEFAULT_ORDER))?
        }
        other => return Err(CliError::Config(format!("unknown method {other:?}"))),
    })
}

fn charfun_cmd(s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    let params = s.params()?;
    let (x_max, step) = (s.x_max.unwrap_or(50.0), s.step.unwrap_or(0.05));
    let grid = charfun_grid(s, x_max, step)?;
    out.csv("charfun.csv", |w| grid.write_csv(w))?;
    let check = grid.check(1e-8);
    let tail = tail_exponent_check(&grid).ok();
    let pass = check.is_ok() && tail.as_ref().is_none_or(|t| t.passed);
    out.json(
        "charfun.json",
        &Verdict::new(
            "charfun",
            &params,
            pass,
            json!({ "method": grid.method, "x_max": x_max, "step": step,
                    "check": check.as_ref().err().map(|e| e.to_string()), "tail": tail }),
        ),
    )?;
    let mut config = base_config(s, Some(&params));
    config.master_seed = None;
    config.extra.insert("x_max".into(), json!(x_max));
    config.extra.insert("step".into(), json!(step));
    config.extra.insert("method".into(), json!(grid.method));
    Ok(Outcome { config, pass, summary: format!("{} nodes, checks {}", grid.len(), if pass { "ok" } else { "failed" }) })
}

fn density_cmd(s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    let params = s.params()?;
    let (x_max, step) = (s.x_max.unwrap_or(2000.0), s.step.unwrap_or(0.05));
    let grid = charfun_grid(s, x_max, step)?;
    let est = density_fourier_inversion(&grid, &DensityOptions::default())?;
    out.csv("density.csv", |w| est.write_csv(w))?;
    out.json("density.json", &est.diagnostics_json())?;
    let pass = (0.98..=1.02).contains(&est.mass);
    let mut config = base_config(s, Some(&params));
    config.master_seed = None;
    config.extra.insert("x_max".into(), json!(x_max));
    config.extra.insert("step".into(), json!(step));
    Ok(Outcome { config, pass, summary: format!("mass {:.4}, min {:.2e}", est.mass, est.min_value) })
}

/// Default checkpoints of a statistics command.
enum Cps {
    Log,
    End,
    /// Fixed list, cut at `n` and closed with `n`.
    List(&'static [u64]),
}

fn ensemble(s: &Settings, default_n: u64, default_replicas: u64, cps: Cps) -> CliResult<ReplicaEnsemble> {
    let params = s.params()?;
    let n = s.n.unwrap_or(default_n);
    let cps = if !s.checkpoints.is_empty() {
        s.checkpoints.clone()
    } else {
        match cps {
            Cps::Log => log_checkpoints(10.min(n), n, 8),
            Cps::End => vec![n],
            Cps::List(list) => {
                let mut v: Vec<u64> = list.iter().copied().filter(|&c| c < n).collect();
                v.push(n);
                v
            }
        }
    };
    Ok(ReplicaEnsemble::new(params, s.replicas.unwrap_or(default_replicas), s.seed(), cps)?.with_workers(s.workers))
}

fn ensemble_config(ens: &ReplicaEnsemble) -> ExperimentConfig {
    ExperimentConfig {
        d: Some(ens.params.d),
        p: Some(ens.params.p.clone()),
        n_max: Some(ens.n_max()),
        replicas: Some(ens.replicas),
        master_seed: Some(ens.master_seed),
        checkpoints: ens.checkpoints.clone(),
        ..Default::default()
    }
}

fn table_csv(header: &str, rows: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s.into_bytes()
}

pub fn stats_cmd(which: StatsCommand, s: &Settings, out: &mut OutputDir) -> CliResult<Outcome> {
    let name = format!("{which:?}").to_lowercase();
    let mut extra = serde_json::Map::new();
    let (ens, curve, verdict): (ReplicaEnsemble, Option<StatCurve>, Verdict) = match which {
        StatsCommand::Msd => {
            let ens = ensemble(s, 10_000, 1000, Cps::Log)?;
            let rep = msd_empirical(&ens)?;
            let v = Verdict::new("msd", &ens.params, rep.pass, serde_json::to_value(&rep).expect("json"));
            (ens, Some(rep.curve()), v)
        }
        StatsCommand::Zeros => {
            let ens = ensemble(s, 100_000, 1000, Cps::Log)?;
            let rep = zero_counts(&ens)?;
            let pass = rep.last_change.abs() < 0.05;
            let details = json!({ "report": rep, "growth_exponent": rep.growth_exponent(), "stabilized": pass });
            (ens.clone(), Some(rep.curve()), Verdict::new("zeros", &ens.params, pass, details))
        }
        StatsCommand::Exit => {
            let ens = ensemble(s, 1, 10_000, Cps::End)?;
            let m = s.m.unwrap_or(10);
            extra.insert("m".into(), json!(m));
            let rep = exit_time_ensemble(&ens.params, m, ens.replicas, ens.master_seed, s.workers, EXIT_CAP)?;
            let pass = rep.bound_ok && rep.gamblers_ruin.unwrap_or(true) && rep.censored == 0;
            let mut c = StatCurve::default();
            c.push(m, rep.mean.mean, rep.mean.se);
            let v = Verdict::new("exit", &ens.params, pass, serde_json::to_value(&rep).expect("json"));
            (ens, Some(c), v)
        }
        StatsCommand::Axis => {
            let ens = ensemble(s, 10_000, 1000, Cps::Log)?;
            let rep = axis_occupation_error(&ens)?;
            let v = Verdict::new("axis", &ens.params, rep.sums_exact, serde_json::to_value(&rep).expect("json"));
            (ens, Some(rep.curve()), v)
        }
        StatsCommand::Cdf => {
            let ens = ensemble(s, 10_000, 10_000, Cps::Log)?;
            let rep = normalized_cdf_distance(&ens)?;
            let critical = ens.params.p.cmp_rational(&critical_p(1)).is_eq();
            let threshold = 0.01 + 1.63 / (ens.replicas as f64).sqrt();
            let pass = if critical {
                rep.strictly_decreasing()
            } else {
                rep.distance.last().is_some_and(|&x| x < threshold)
            };
            let details = json!({ "report": rep, "threshold": (!critical).then_some(threshold),
                                  "trend_check": critical });
            (ens.clone(), Some(rep.curve()), Verdict::new("cdf", &ens.params, pass, details))
        }
        StatsCommand::Martingale => {
            let ens = ensemble(s, 1000, 10_000, Cps::List(&[1, 2, 3, 10, 100]))?;
            let rep = martingale_residuals(&ens)?;
            let mut c = StatCurve::default();
            for r in &rep.rows {
                c.push(r.n, r.n_mart.mean, r.n_mart.se);
            }
            let v = Verdict::new("martingale", &ens.params, rep.pass, serde_json::to_value(&rep).expect("json"));
            (ens, Some(c), v)
        }
        StatsCommand::Lil => {
            let ens = ensemble(s, 100_000, 100, Cps::End)?;
            let band = lil_band(&ens)?;
            out.write(
                "lil_replicas.csv",
                &table_csv(
                    "replica,running_max,final_ratio",
                    band.results.iter().enumerate().map(|(r, x)| format!("{r},{:.17e},{:.17e}", x.running_max, x.final_ratio)),
                ),
            )?;
            let v = Verdict::new("lil", &ens.params, band.pass, serde_json::to_value(&band).expect("json"));
            (ens, None, v)
        }
        StatsCommand::Exponent => {
            let ens = ensemble(s, 1_000_000, 200, Cps::Log)?;
            let rep = log_norm_exponent_ensemble(&ens)?;
            let last = *rep.medians.last().expect("checkpoints");
            let a = memory_exponent(ens.params.d, &ens.params.p.value());
            let (lo, hi) = match regime(&ens.params) {
                Regime::Critical => (0.9, 1.05),
                Regime::Diffusive => (0.9, 1.1),
                Regime::Superdiffusive => (2.0 * a - 0.1, 2.0 * a + 0.1),
            };
            let pass = (lo..=hi).contains(&last);
            let details = json!({ "report": rep, "band": [lo, hi], "median_at_end": last });
            (ens.clone(), Some(rep.curve()), Verdict::new("exponent", &ens.params, pass, details))
        }
        StatsCommand::Escape => {
            let ens = ensemble(s, 1_000_000, 100, Cps::End)?;
            let nu = s.nu.unwrap_or(0.1);
            extra.insert("nu".into(), json!(nu));
            let n = ens.n_max();
            let results = ens.map(|w| rate_of_escape_check(w, nu, n))?;
            let limit = n / 100;
            let early = results.iter().filter(|r| r.last_violation.is_none_or(|v| v < limit)).count();
            let fraction = early as f64 / results.len() as f64;
            out.write(
                "escape_replicas.csv",
                &table_csv(
                    "replica,violations,last_violation,sqrt_log_violations",
                    results.iter().enumerate().map(|(r, x)| {
                        format!("{r},{},{},{}", x.violations, x.last_violation.unwrap_or(0), x.sqrt_log_violations)
                    }),
                ),
            )?;
            let details = json!({ "last_violation_limit": limit, "fraction_settled": fraction });
            (ens.clone(), None, Verdict::new("escape", &ens.params, fraction >= 0.95, details))
        }
        StatsCommand::Direction => {
            let ens = ensemble(s, 100_000, 100, Cps::End)?;
            let n = ens.n_max();
            let results = ens.map(|w| direction_series(w, n))?;
            out.write(
                "direction_replicas.csv",
                &table_csv(
                    "replica,oscillation,sign_changes",
                    results.iter().enumerate().map(|(r, x)| {
                        format!("{r},{:.17e},{}", x.oscillation, x.sign_changes.iter().sum::<u64>())
                    }),
                ),
            )?;
            let osc: Vec<f64> = results.iter().map(|r| r.oscillation).collect();
            let details = json!({ "median_oscillation": median(&osc), "diagnostic": true, "samples": results[0].samples });
            (ens.clone(), None, Verdict::new("direction", &ens.params, true, details))
        }
        StatsCommand::Drift => {
            let n_hi = s.n.unwrap_or(10_000);
            let opts = DriftOptions { n_hi, n_lo: (n_hi / 10).max(1), ..Default::default() };
            let ens = ensemble(s, n_hi, 200, Cps::End)?;
            let rep = lyapunov_drift_probe(&ens, &opts)?;
            let v = Verdict::new("drift", &ens.params, rep.pass, serde_json::to_value(&rep).expect("json"));
            (ens, None, v)
        }
    };
    if let Some(c) = &curve {
        out.csv(&format!("{name}.csv"), |w| c.write_csv(w))?;
    }
    out.json(&format!("{name}.json"), &verdict)?;
    out.json(
        "ensemble.json",
        &json!({ "params": ens.params, "master_seed": ens.master_seed, "replicas": ens.replicas,
                 "checkpoints": ens.checkpoints, "stream_allocation": STREAM_ALLOCATION }),
    )?;
    let mut config = ensemble_config(&ens);
    config.extra = extra;
    let pass = verdict.pass;
    Ok(Outcome { config, pass, summary: format!("{name}: {}", if pass { "pass" } else { "fail" }) })
}
