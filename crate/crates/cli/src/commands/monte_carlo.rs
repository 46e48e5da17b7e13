//! Monte Carlo campaigns of the displacement estimator against the closed
//! forms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cvsense::protocols::{simulate_displacement_protocol, Scheme, SensorNetworkConfig, Transmissivity};

use super::{num, num_list, Table};
use crate::config::ConfigFile;
use crate::error::{CliError, Result};

pub const KEYS: &[&str] = &["M", "N_S", "eta", "weights", "scheme", "alpha", "trials", "seed"];
pub const DEFAULT_TRIALS: u64 = 100_000;
/// A case passes when the empirical rms is within this many standard errors
/// of the closed form.
pub const PASS_SIGMA: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloParams {
    pub cases: Vec<SensorNetworkConfig>,
}

/// Reads campaign cases; `scheme = both` (the default) expands to one case
/// per scheme. `trials` and `seed` overrides replace the file's values. Case
/// `k` runs on seed `seed + k` so that campaigns are independent.
pub fn load(path: &Path, trials: Option<u64>, seed: Option<u64>) -> Result<MonteCarloParams> {
    let file = ConfigFile::load(path, KEYS)?;
    let mut cases = Vec::new();
    for case in file.cases() {
        let m = case.require_count("M")? as usize;
        let eta = match case.f64_list("eta")?.unwrap_or_else(|| vec![1.0]) {
            v if v.len() == 1 => Transmissivity::Uniform(v[0]),
            v => Transmissivity::PerNode(v),
        };
        let schemes = match case.text("scheme").unwrap_or("both") {
            "both" => vec![Scheme::Entangled, Scheme::Product],
            other => vec![other.parse::<Scheme>().map_err(|e| case.invalid("scheme", e))?],
        };
        for scheme in schemes {
            let cfg = SensorNetworkConfig {
                num_nodes: m,
                total_photons: case.require_f64("N_S")?,
                eta: eta.clone(),
                weights: case.f64_list("weights")?,
                scheme,
                alpha_true: case.f64("alpha")?.unwrap_or(0.0),
                seed: seed
                    .map_or_else(|| case.count("seed").map(|s| s.unwrap_or(0)), Ok)?
                    .wrapping_add(cases.len() as u64),
                trials: trials.map_or_else(|| case.count("trials").map(|t| t.unwrap_or(DEFAULT_TRIALS)), Ok)?
                    as usize,
            };
            cfg.validate().map_err(|e| {
                let key = match &e {
                    cvsense::Error::InvalidParameter { name, .. } => *name,
                    _ => "M",
                };
                case.invalid(key, e)
            })?;
            cases.push(cfg);
        }
    }
    Ok(MonteCarloParams { cases })
}

fn eta_text(eta: &Transmissivity) -> String {
    match eta {
        Transmissivity::Uniform(e) => num(*e),
        Transmissivity::PerNode(v) => num_list(v),
    }
}

pub fn run(p: &MonteCarloParams) -> Result<Table> {
    if p.cases.is_empty() {
        return Err(CliError::Usage("no campaign cases".into()));
    }
    let mut table = Table::new(&[
        "case",
        "scheme",
        "M",
        "N_S",
        "eta",
        "weights",
        "alpha",
        "trials",
        "seed",
        "empirical_mean",
        "empirical_rms",
        "rms_standard_error",
        "analytic_rms",
        "z_score",
        "status",
    ]);
    for (index, cfg) in p.cases.iter().enumerate() {
        let report = simulate_displacement_protocol(cfg)?;
        let z = report.z_score();
        let pass = z.abs() < PASS_SIGMA;
        if !pass {
            table.failures.push(format!(
                "case {index} ({} M={}): empirical rms {} vs analytic {} ({z:.2} sigma)",
                cfg.scheme, cfg.num_nodes, report.empirical_rms_error, report.analytic_rms
            ));
        }
        table.rows.push(vec![
            index.to_string(),
            cfg.scheme.to_string(),
            cfg.num_nodes.to_string(),
            num(cfg.total_photons),
            eta_text(&cfg.eta),
            cfg.weights.as_deref().map_or_else(|| "uniform".to_string(), num_list),
            num(cfg.alpha_true),
            cfg.trials.to_string(),
            cfg.seed.to_string(),
            num(report.empirical_mean),
            num(report.empirical_rms_error),
            num(report.rms_standard_error),
            num(report.analytic_rms),
            num(z),
            if pass { "PASS" } else { "FAIL" }.to_string(),
        ]);
    }
    Ok(table)
}
