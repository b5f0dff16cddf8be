//! CSV curves and JSON verdicts.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::walk::{regime, Regime, WalkParams};

/// A curve `n ↦ value ± stderr`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatCurve {
    pub n: Vec<u64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl StatCurve {
    pub fn push(&mut self, n: u64, value: f64, stderr: f64) {
        self.n.push(n);
        self.value.push(value);
        self.stderr.push(stderr);
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// CSV `n,value,stderr`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,value,stderr")?;
        for k in 0..self.len() {
            writeln!(w, "{},{:.17e},{:.17e}", self.n[k], self.value[k], self.stderr[k])?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub statistic: String,
    pub regime: Regime,
    pub pass: bool,
    pub details: serde_json::Value,
}

impl Verdict {
    pub fn new(statistic: &str, params: &WalkParams, pass: bool, details: serde_json::Value) -> Self {
        Self { statistic: statistic.into(), regime: regime(params), pass, details }
    }
}
