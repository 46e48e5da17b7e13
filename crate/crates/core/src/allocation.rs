//! Weighted-sum estimation over nodes with unequal transmissivities.
//!
//! The estimator is `Σ_m w_m x_m` for weights on the simplex. With the
//! entangled input the squeezed collective mode is `b₁ ∝ Σ_m w_m √η_m a_m`
//! and the rms error has a closed form. With a product input the per-node
//! photon numbers are chosen by a water-filling solve of the convex problem
//!
//! `min ½ √[Σ_m w_m² (η_m g(N_m) + 1 − η_m)]` s.t. `Σ_m N_m = N_S`,
//!
//! where `g(N) = (√(N+1) − √N)²` is the squeezed x variance over 1/4.

use serde::{Deserialize, Serialize};

use crate::error::{check_photons, check_transmissivity, invalid, Error, Result};
use crate::gaussian::squeeze_gain;

const SIMPLEX_TOLERANCE: f64 = 1e-12;
const BISECTION_CAP: usize = 200;
const ALTERNATION_CAP: usize = 10_000;
const ALTERNATION_TOLERANCE: f64 = 1e-12;
const FLOOR_PHOTONS: f64 = 1e-12;

/// Estimator weights, channel transmissivities and photon budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedNetwork {
    weights: Vec<f64>,
    etas: Vec<f64>,
    total_photons: f64,
}

impl WeightedNetwork {
    pub fn new(weights: Vec<f64>, etas: Vec<f64>, total_photons: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("weights", "network needs at least one node"));
        }
        if weights.len() != etas.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                actual: etas.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights", format!("weight {w} is negative or not finite")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(invalid("weights", format!("weights sum to {sum}, not 1")));
        }
        for &eta in &etas {
            check_transmissivity("eta", eta)?;
        }
        check_photons("N_S", total_photons)?;
        Ok(Self {
            weights,
            etas,
            total_photons,
        })
    }

    /// Uniform weights `1/M`.
    pub fn uniform_weights(etas: Vec<f64>, total_photons: f64) -> Result<Self> {
        let m = etas.len().max(1);
        Self::new(vec![1.0 / m as f64; etas.len()], etas, total_photons)
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn total_photons(&self) -> f64 {
        self.total_photons
    }

    /// `w̄ = √(Σ w_m²)`.
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `W̄ = √(Σ w_m² η_m)`.
    pub fn signal_norm(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.etas)
            .map(|(w, eta)| w * w * eta)
            .sum::<f64>()
            .sqrt()
    }

    /// `η̄ = Σ w_m² η_m / w̄²`.
    pub fn effective_eta(&self) -> f64 {
        (self.signal_norm() / self.weight_norm()).powi(2)
    }

    /// Splitter coefficients `w_m √η_m` of the collective squeezed mode.
    pub fn splitter_coefficients(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.etas)
            .map(|(w, eta)| w * eta.sqrt())
            .collect()
    }

    /// Product-scheme rms error at a given photon allocation.
    pub fn product_objective(&self, photons: &[f64]) -> f64 {
        assert_eq!(photons.len(), self.num_nodes(), "allocation length");
        let total: f64 = self
            .weights
            .iter()
            .zip(&self.etas)
            .zip(photons)
            .map(|((w, eta), &n)| w * w * (eta / squeeze_gain(n) + 1.0 - eta))
            .sum();
        0.5 * total.sqrt()
    }

    fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, self.etas.clone(), self.total_photons)
    }
}

/// Entangled-scheme rms error of the weighted estimator,
/// `(w̄/2) √[η̄/(√(N_S+1)+√N_S)² + 1 − η̄]`.
pub fn weighted_entangled_rms(net: &WeightedNetwork) -> f64 {
    let eta_bar = net.effective_eta();
    0.5 * net.weight_norm() * (eta_bar / squeeze_gain(net.total_photons) + 1.0 - eta_bar).sqrt()
}

/// Water-filling solution of the product-state photon allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub photons: Vec<f64>,
    pub objective: f64,
    /// Largest relative violation `|w²η g′(N) + λ|/λ` over active nodes.
    pub kkt_residual: f64,
    pub iterations: usize,
}

fn g(n: f64) -> f64 {
    1.0 / squeeze_gain(n)
}

/// `g′(N) = −g(N)/√(N(N+1))`.
fn g_prime(n: f64) -> f64 {
    -g(n) / (n * (n + 1.0)).sqrt()
}

/// Solves `g(N)/√(N(N+1)) = c` for `N`: with `k = 1 + c/2`,
/// `N = 1/(2√(k²−1)(k + √(k²−1)))`.
fn inverse_slope(c: f64) -> f64 {
    let k = 1.0 + 0.5 * c;
    let root = (c * (1.0 + 0.25 * c)).sqrt();
    1.0 / (2.0 * root * (k + root))
}

pub fn allocate_photons_product(net: &WeightedNetwork) -> Result<AllocationResult> {
    let total = net.total_photons;
    if !(total > 0.0) {
        return Err(invalid("N_S", "photon allocation needs a positive budget"));
    }
    let strength: Vec<f64> = net
        .weights
        .iter()
        .zip(&net.etas)
        .map(|(w, eta)| w * w * eta)
        .collect();
    let active: Vec<usize> = (0..strength.len()).filter(|&m| strength[m] > 0.0).collect();
    let fill = |lambda: f64| -> Vec<f64> {
        strength
            .iter()
            .map(|&s| if s > 0.0 { inverse_slope(lambda / s) } else { 0.0 })
            .collect()
    };

    let mut lo = active
        .iter()
        .map(|&m| strength[m] * g_prime(total).abs())
        .fold(f64::INFINITY, f64::min);
    let mut hi = active
        .iter()
        .map(|&m| strength[m] * g_prime(FLOOR_PHOTONS).abs())
        .fold(0.0, f64::max);
    let mut iterations = 0;
    while iterations < BISECTION_CAP && hi / lo - 1.0 > 4.0 * f64::EPSILON {
        let mid = (lo * hi).sqrt();
        if fill(mid).iter().sum::<f64>() > total {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let lambda = (lo * hi).sqrt();
    let mut photons = fill(lambda);
    let filled: f64 = photons.iter().sum();
    let residual_sum = (filled - total).abs() / total;
    if residual_sum > 1e-6 {
        return Err(Error::NonConvergence {
            what: "photon allocation bisection",
            iterations,
            residual: residual_sum,
        });
    }
    for n in &mut photons {
        *n *= total / filled;
    }
    let kkt_residual = active
        .iter()
        .map(|&m| (strength[m] * g_prime(photons[m]) + lambda).abs() / lambda)
        .fold(0.0, f64::max);
    Ok(AllocationResult {
        objective: net.product_objective(&photons),
        photons,
        kkt_residual,
        iterations,
    })
}

fn normalized_reciprocals(costs: impl Iterator<Item = f64>) -> Vec<f64> {
    let inv: Vec<f64> = costs.map(|c| 1.0 / c).collect();
    let sum: f64 = inv.iter().sum();
    inv.into_iter().map(|x| x / sum).collect()
}

/// Weights minimizing the entangled-scheme error: `w_m ∝ 1/c_m` with
/// `c_m = η_m/(√(N_S+1)+√N_S)² + 1 − η_m`.
pub fn optimal_weights_entangled(etas: &[f64], total_photons: f64) -> Result<Vec<f64>> {
    if etas.is_empty() {
        return Err(invalid("eta", "network needs at least one node"));
    }
    for &eta in etas {
        check_transmissivity("eta", eta)?;
    }
    check_photons("N_S", total_photons)?;
    let s = squeeze_gain(total_photons);
    Ok(normalized_reciprocals(etas.iter().map(|eta| eta / s + 1.0 - eta)))
}

/// Joint weights and allocation for the product scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductOptimum {
    pub weights: Vec<f64>,
    pub allocation: AllocationResult,
    /// Objective after each alternation round.
    pub history: Vec<f64>,
}

/// Alternating minimization: weights `w_m ∝ 1/(η_m g(N_m) + 1 − η_m)` for a
/// fixed allocation, then the water-filling allocation for fixed weights,
/// until the objective moves by less than 1e-12.
pub fn optimal_weights_product(etas: &[f64], total_photons: f64) -> Result<ProductOptimum> {
    let mut net = WeightedNetwork::uniform_weights(etas.to_vec(), total_photons)?;
    let mut allocation = allocate_photons_product(&net)?;
    let mut history = vec![allocation.objective];
    for _ in 0..ALTERNATION_CAP {
        let weights = normalized_reciprocals(
            etas.iter()
                .zip(&allocation.photons)
                .map(|(eta, &n)| eta * g(n) + 1.0 - eta),
        );
        net = net.with_weights(weights)?;
        allocation = allocate_photons_product(&net)?;
        let previous = *history.last().unwrap();
        history.push(allocation.objective);
        if (previous - allocation.objective).abs() < ALTERNATION_TOLERANCE {
            return Ok(ProductOptimum {
                weights: net.weights,
                allocation,
                history,
            });
        }
    }
    let n = history.len();
    Err(Error::NonConvergence {
        what: "alternating weight/photon optimization",
        iterations: ALTERNATION_CAP,
        residual: (history[n - 2] - history[n - 1]).abs(),
    })
}
