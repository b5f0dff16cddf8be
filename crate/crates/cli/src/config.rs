//! Flags, the JSON config file and their merge.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use merw_core::walk::{Prob, WalkParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "merw-lab", version, about = "Elephant random walk experiments", arg_required_else_help = true)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Independent MERW (or d-ERW with --q) trajectories.
    Simulate,
    /// Shared-uniform coupling of a MERW with d-ERWs, or of two ERWs (--erw-pair).
    Couple,
    /// Pólya urn with its continuous-time embedding.
    Urn,
    /// Numerics for the superdiffusive limit.
    #[command(subcommand)]
    Limit(LimitCommand),
    /// Monte Carlo statistics over replica ensembles.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Runs the acceptance suite.
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum LimitCommand {
    Moments,
    Charfun,
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum StatsCommand {
    Msd,
    Zeros,
    Exit,
    Axis,
    Cdf,
    Martingale,
    Lil,
    Exponent,
    Escape,
    Direction,
    Drift,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Simulate => "simulate".into(),
            Command::Couple => "couple".into(),
            Command::Urn => "urn".into(),
            Command::Limit(l) => format!("limit {}", format!("{l:?}").to_lowercase()),
            Command::Stats(s) => format!("stats {}", format!("{s:?}").to_lowercase()),
            Command::Verify => "verify".into(),
        }
    }
}

/// Flags shared by every subcommand. Each may also come from `--config`.
#[derive(Clone, Debug, Default, Args)]
pub struct Options {
    /// JSON config file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Memory parameter, decimal or "num/den".
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// d-ERW parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Vec<String>,
    /// Horizon (steps, or urn events).
    #[arg(long, global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trajectory recording stride.
    #[arg(long, global = true)]
    pub stride: Option<u64>,
    /// Worker threads (0 = one per core). Does not affect any output.
    #[arg(long, global = true, env = "MERW_LAB_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Exit with status 3 when the command's check fails.
    #[arg(long, global = true)]
    pub assert: bool,
    /// Substring selecting acceptance criteria by number or name.
    #[arg(long, global = true)]
    pub filter: Option<String>,
    /// Checkpoints, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub checkpoints: Vec<u64>,
    /// Exit radius.
    #[arg(long, global = true)]
    pub m: Option<u64>,
    /// Escape exponent.
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    /// Series or moment order.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Characteristic function grid half-width.
    #[arg(long, global = true)]
    pub x_max: Option<f64>,
    /// Characteristic function grid step.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Characteristic function method: ode or series.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// Couple two one-dimensional ERWs with parameters p and q.
    #[arg(long, global = true)]
    pub erw_pair: bool,
}

/// A number given either as a JSON number or as a `"num/den"` string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Number {
    Text(String),
    Json(serde_json::Number),
}

impl Number {
    fn text(self) -> String {
        match self {
            Number::Text(s) => s,
            Number::Json(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    d: Option<usize>,
    p: Option<Number>,
    #[serde(default)]
    q: Vec<Number>,
    n: Option<u64>,
    replicas: Option<u64>,
    seed: Option<u64>,
    stride: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    #[serde(default)]
    assert: bool,
    filter: Option<String>,
    #[serde(default)]
    checkpoints: Vec<u64>,
    m: Option<u64>,
    nu: Option<f64>,
    order: Option<usize>,
    x_max: Option<f64>,
    step: Option<f64>,
    method: Option<String>,
    #[serde(default)]
    erw_pair: bool,
}

impl Options {
    /// Fills unset flags from the config file, if any.
    pub fn resolve(mut self) -> CliResult<Settings> {
        if let Some(path) = self.config.take() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            if text.trim().is_empty() {
                return Err(CliError::Config(format!("{} is empty", path.display())));
            }
            let file: FileConfig =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            self.d = self.d.or(file.d);
            self.p = self.p.or(file.p.map(Number::text));
            if self.q.is_empty() {
                self.q = file.q.into_iter().map(Number::text).collect();
            }
            self.n = self.n.or(file.n);
            self.replicas = self.replicas.or(file.replicas);
            self.seed = self.seed.or(file.seed);
            self.stride = self.stride.or(file.stride);
            self.workers = self.workers.or(file.workers);
            self.out = self.out.or(file.out);
            self.assert |= file.assert;
            self.filter = self.filter.or(file.filter);
            if self.checkpoints.is_empty() {
                self.checkpoints = file.checkpoints;
            }
            self.m = self.m.or(file.m);
            self.nu = self.nu.or(file.nu);
            self.order = self.order.or(file.order);
            self.x_max = self.x_max.or(file.x_max);
            self.step = self.step.or(file.step);
            self.method = self.method.or(file.method);
            self.erw_pair |= file.erw_pair;
        }
        let p = self.p.as_deref().map(parse_prob).transpose()?;
        let q = self.q.iter().map(|s| parse_prob(s)).collect::<CliResult<Vec<_>>>()?;
        Ok(Settings {
            d: self.d,
            p,
            q,
            n: self.n,
            replicas: self.replicas,
            seed: self.seed,
            stride: self.stride,
            workers: self.workers.unwrap_or(0),
            out: self.out,
            assert: self.assert,
            filter: self.filter,
            checkpoints: self.checkpoints,
            m: self.m,
            nu: self.nu,
            order: self.order,
            x_max: self.x_max,
            step: self.step,
            method: self.method,
            erw_pair: self.erw_pair,
        })
    }
}

fn parse_prob(s: &str) -> CliResult<Prob> {
    let p = Prob::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
    if !p.in_unit_interval() {
        return Err(CliError::Config(format!("probability {s} outside [0, 1]")));
    }
    Ok(p)
}

/// Merged configuration. `workers`, `out` and `assert` never reach the
/// recorded config, so they cannot change any output.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub d: Option<usize>,
    pub p: Option<Prob>,
    pub q: Vec<Prob>,
    pub n: Option<u64>,
    pub replicas: Option<u64>,
    pub seed: Option<u64>,
    pub stride: Option<u64>,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub assert: bool,
    pub filter: Option<String>,
    pub checkpoints: Vec<u64>,
    pub m: Option<u64>,
    pub nu: Option<f64>,
    pub order: Option<usize>,
    pub x_max: Option<f64>,
    pub step: Option<f64>,
    pub method: Option<String>,
    pub erw_pair: bool,
}

/// Config block written to the manifest.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Prob>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<Prob>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<u64>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Settings {
    pub fn d(&self) -> u64 {
        self.d.unwrap_or(1) as u64
    }

    pub fn p(&self) -> CliResult<Prob> {
        self.p.clone().ok_or_else(|| CliError::Config("--p is required".into()))
    }

    pub fn params(&self) -> CliResult<WalkParams> {
        Ok(WalkParams::new(self.d() as usize, self.p()?)?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("merw-lab-out").join(command.replace(' ', "-")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("merw-lab-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"d": 2, "p": "5/8", "q": [0, "1/2"], "n": 10, "seed": 3}"#).unwrap();
        let opts = Options { config: Some(path.clone()), n: Some(20), ..Default::default() };
        let s = opts.resolve().unwrap();
        assert_eq!(s.d, Some(2));
        assert_eq!(s.n, Some(20));
        assert_eq!(s.p.unwrap().to_string(), "5/8");
        assert_eq!(s.q.len(), 2);
        std::fs::write(&path, r#"{"dimension": 2}"#).unwrap();
        let opts = Options { config: Some(path.clone()), ..Default::default() };
        assert!(matches!(opts.resolve(), Err(CliError::Config(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn probabilities_validated() {
        assert!(parse_prob("4/5").is_ok());
        assert!(parse_prob("1.5").is_err());
        assert!(parse_prob("x").is_err());
    }
}
