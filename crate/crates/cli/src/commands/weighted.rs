//! Weighted-sum estimation with unequal transmissivities: closed-form
//! entangled error, product-state photon allocation and weight optimization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cvsense::allocation::{
    allocate_photons_product, optimal_weights_entangled, optimal_weights_product, weighted_entangled_rms,
    WeightedNetwork,
};

use super::{num, num_list, Table};
use crate::config::ConfigFile;
use crate::error::{CliError, Result};
use crate::grid;

pub const KEYS: &[&str] = &["eta", "N_S", "weights"];
const GRID_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCase {
    pub etas: Vec<f64>,
    pub total_photons: f64,
    /// Fixed estimator weights; uniform when absent.
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedParams {
    pub cases: Vec<WeightedCase>,
}

pub fn load(path: &Path) -> Result<WeightedParams> {
    let file = ConfigFile::load(path, KEYS)?;
    let cases = file
        .cases()
        .iter()
        .map(|case| {
            let c = WeightedCase {
                etas: case.require_f64_list("eta")?,
                total_photons: case.require_f64("N_S")?,
                weights: case.f64_list("weights")?,
            };
            c.network().map_err(|e| {
                let key = match &e {
                    CliError::Core(cvsense::Error::InvalidParameter { name, .. }) if *name == "N_S" => "N_S",
                    CliError::Core(cvsense::Error::InvalidParameter { name, .. }) if *name == "weights" => "weights",
                    _ => "eta",
                };
                case.invalid(key, e)
            })?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightedParams { cases })
}

impl WeightedCase {
    fn network(&self) -> Result<WeightedNetwork> {
        let net = match &self.weights {
            Some(w) => WeightedNetwork::new(w.clone(), self.etas.clone(), self.total_photons)?,
            None => WeightedNetwork::uniform_weights(self.etas.clone(), self.total_photons)?,
        };
        Ok(net)
    }
}

struct Oracles {
    product_fixed: f64,
    entangled_optimal: f64,
    product_optimal: f64,
}

// Two-node oracles: every quantity is a function of w₁ and/or N₁ alone.
fn two_node_oracles(case: &WeightedCase, net: &WeightedNetwork) -> Result<Oracles> {
    let n = case.total_photons;
    let etas = case.etas.clone();
    let product_fixed = grid::minimize_1d(|n1| net.product_objective(&[n1, n - n1]), 0.0, n, GRID_POINTS).1;
    let entangled_optimal = grid::minimize_1d(
        |w1| {
            WeightedNetwork::new(vec![w1, 1.0 - w1], etas.clone(), n)
                .map(|net| weighted_entangled_rms(&net))
                .unwrap_or(f64::INFINITY)
        },
        0.0,
        1.0,
        GRID_POINTS,
    )
    .1;
    let product_optimal = grid::minimize_2d(
        |w1, n1| {
            WeightedNetwork::new(vec![w1, 1.0 - w1], etas.clone(), n)
                .map(|net| net.product_objective(&[n1, n - n1]))
                .unwrap_or(f64::INFINITY)
        },
        (0.0, 1.0),
        (0.0, n),
        GRID_POINTS,
    )
    .1;
    Ok(Oracles {
        product_fixed,
        entangled_optimal,
        product_optimal,
    })
}

pub fn run(p: &WeightedParams) -> Result<Table> {
    if p.cases.is_empty() {
        return Err(CliError::Usage("no weighted cases".into()));
    }
    let mut table = Table::new(&[
        "case",
        "row",
        "M",
        "N_S",
        "eta",
        "weights",
        "photons",
        "objective",
        "kkt_residual",
        "iterations",
        "grid_objective",
        "grid_gap",
    ]);
    for (index, case) in p.cases.iter().enumerate() {
        let net = case.network()?;
        let oracles = if case.etas.len() == 2 {
            Some(two_node_oracles(case, &net)?)
        } else {
            None
        };
        let grid_cols = |value: f64, oracle: Option<f64>| match oracle {
            Some(g) => vec![num(g), num(value - g)],
            None => vec![String::new(), String::new()],
        };
        let mut push = |row: &str, weights: &[f64], photons: String, objective: f64, kkt: String, iters: String, oracle| {
            let mut cells = vec![
                index.to_string(),
                row.to_string(),
                case.etas.len().to_string(),
                num(case.total_photons),
                num_list(&case.etas),
                num_list(weights),
                photons,
                num(objective),
                kkt,
                iters,
            ];
            cells.extend(grid_cols(objective, oracle));
            table.rows.push(cells);
        };

        push(
            "entangled",
            net.weights(),
            String::new(),
            weighted_entangled_rms(&net),
            String::new(),
            String::new(),
            None,
        );
        let alloc = allocate_photons_product(&net)?;
        push(
            "product",
            net.weights(),
            num_list(&alloc.photons),
            alloc.objective,
            num(alloc.kkt_residual),
            alloc.iterations.to_string(),
            oracles.as_ref().map(|o| o.product_fixed),
        );
        let we = optimal_weights_entangled(&case.etas, case.total_photons)?;
        let ent_opt = weighted_entangled_rms(&WeightedNetwork::new(we.clone(), case.etas.clone(), case.total_photons)?);
        push(
            "entangled_optimal_weights",
            &we,
            String::new(),
            ent_opt,
            String::new(),
            String::new(),
            oracles.as_ref().map(|o| o.entangled_optimal),
        );
        let joint = optimal_weights_product(&case.etas, case.total_photons)?;
        push(
            "product_optimal_weights",
            &joint.weights,
            num_list(&joint.allocation.photons),
            joint.allocation.objective,
            num(joint.allocation.kkt_residual),
            (joint.history.len() - 1).to_string(),
            oracles.as_ref().map(|o| o.product_optimal),
        );
    }
    Ok(table)
}
