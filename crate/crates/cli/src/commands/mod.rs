pub mod curves;
pub mod fisher;
pub mod monte_carlo;
pub mod phase;
pub mod weighted;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Rows of one CSV output plus messages destined for the manifest.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
    /// Statistical checks that did not pass; nonempty means exit code 2.
    pub failures: Vec<String>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            ..Self::default()
        }
    }
}

/// A fully resolved run: everything needed to regenerate the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Job {
    RmsCurve(curves::RmsCurveParams),
    RatioCurve(curves::RatioCurveParams),
    MonteCarlo(monte_carlo::MonteCarloParams),
    Weighted(weighted::WeightedParams),
    Fisher(fisher::FisherParams),
    Phase(phase::PhaseParams),
}

impl Job {
    pub fn command_name(&self) -> &'static str {
        match self {
            Job::RmsCurve(_) => "rms-curve",
            Job::RatioCurve(_) => "ratio-curve",
            Job::MonteCarlo(_) => "monte-carlo",
            Job::Weighted(_) => "weighted",
            Job::Fisher(_) => "fisher",
            Job::Phase(_) => "phase",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Job::MonteCarlo(p) => p.cases.first().map(|c| c.seed),
            Job::Fisher(p) => p.seed,
            Job::Phase(p) => Some(p.seed),
            _ => None,
        }
    }

    pub fn params_json(&self) -> Result<serde_json::Value> {
        let mut tagged = serde_json::to_value(self)?;
        Ok(tagged["params"].take())
    }

    pub fn from_parts(command: &str, params: serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(serde_json::json!({ "command": command, "params": params }))?)
    }

    pub fn run(&self) -> Result<Table> {
        match self {
            Job::RmsCurve(p) => curves::rms_curve(p),
            Job::RatioCurve(p) => curves::ratio_curve(p),
            Job::MonteCarlo(p) => monte_carlo::run(p),
            Job::Weighted(p) => weighted::run(p),
            Job::Fisher(p) => fisher::run(p),
            Job::Phase(p) => phase::run(p),
        }
    }
}

/// Shortest round-trip decimal form, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn num_list(xs: &[f64]) -> String {
    xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}
