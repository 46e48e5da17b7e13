//! Fisher-information reports: closed form against the fidelity-based
//! numeric value, and the separable Cramér-Rao bound against the product
//! rms error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cvsense::fisher::{cr_bound_separable, fisher_closed_form, fisher_numeric, SqueezedThermalParams, DEFAULT_STEPS};
use cvsense::protocols::product_rms_error;

use super::{num, Table};
use crate::error::{CliError, Result};

/// One row of the information table: `(r_B, n, θ, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherPoint {
    pub r_b: f64,
    pub n: f64,
    pub theta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "table")]
pub enum FisherTable {
    Info { points: Vec<FisherPoint>, steps: Vec<f64> },
    Cr { nodes: Vec<usize>, photons: Vec<f64>, etas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherParams {
    pub seed: Option<u64>,
    pub table: FisherTable,
}

/// Vacuum first, then `draws` random points with `r_B ∈ [0, 2)`,
/// `n ∈ [0, 1)`, `θ ∈ [0, π)`, `η ∈ [0.1, 1]`.
pub fn random_points(draws: usize, seed: u64) -> Vec<FisherPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![FisherPoint {
        r_b: 0.0,
        n: 0.0,
        theta: 0.0,
        eta: 1.0,
    }];
    points.extend((0..draws).map(|_| FisherPoint {
        r_b: rng.random_range(0.0..2.0),
        n: rng.random_range(0.0..1.0),
        theta: rng.random_range(0.0..std::f64::consts::PI),
        eta: rng.random_range(0.1..=1.0),
    }));
    points
}

pub fn run(p: &FisherParams) -> Result<Table> {
    match &p.table {
        FisherTable::Info { points, steps } => {
            if points.is_empty() {
                return Err(CliError::Usage("no parameter points".into()));
            }
            let mut table = Table::new(&["r_B", "n", "theta", "eta", "I_F_closed", "I_F_numeric", "relative_gap"]);
            let mut worst: f64 = 0.0;
            for pt in points {
                let params = SqueezedThermalParams::new(pt.r_b, pt.n, pt.theta, [0.0, 0.0])?;
                let closed = fisher_closed_form(&params, pt.eta)?;
                let numeric = fisher_numeric(&params, pt.eta, 0.0, steps)?;
                let gap = (numeric - closed).abs() / closed;
                worst = worst.max(gap);
                table.rows.push(vec![
                    num(pt.r_b),
                    num(pt.n),
                    num(params.theta),
                    num(pt.eta),
                    num(closed),
                    num(numeric),
                    num(gap),
                ]);
            }
            table.notes.push(format!("maximum relative gap {worst:.3e}"));
            Ok(table)
        }
        FisherTable::Cr { nodes, photons, etas } => {
            let mut table = Table::new(&["M", "N_S", "eta", "cr_bound", "product_rms", "difference"]);
            for &m in nodes {
                for &n in photons {
                    for &eta in etas {
                        let bound = cr_bound_separable(m, n, eta)?;
                        let rms = product_rms_error(m, n, eta)?;
                        table.rows.push(vec![
                            m.to_string(),
                            num(n),
                            num(eta),
                            num(bound),
                            num(rms),
                            num(bound - rms),
                        ]);
                    }
                }
            }
            Ok(table)
        }
    }
}

pub fn default_steps() -> Vec<f64> {
    DEFAULT_STEPS.to_vec()
}
