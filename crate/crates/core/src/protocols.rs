//! Displacement- and phase-sensing protocols over an `M`-node network.
//!
//! The entangled scheme splits one x-squeezed vacuum with `N_S` photons over
//! `M` nodes with a balanced splitter; the product scheme feeds each node an
//! independent squeezed vacuum with `N_S/M` photons. Each node's mode goes
//! through a pure-loss channel, is displaced by `α` and measured by an x
//! homodyne detector; the estimate is the (weighted) average of the outcomes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{allocate_photons_product, weighted_entangled_rms, WeightedNetwork};
use crate::error::{check_photons, check_transmissivity, invalid, Result};
use crate::gaussian::{
    balanced_splitter, squeeze_gain, squeezed_vacuum, unbalanced_splitter, vacuum_state, GaussianState,
    HomodyneSampler, LossChannel, Quadrature, SqueezeAxis, SymplecticTransform,
};

/// Largest phase shift accepted by the phase-sensing simulation.
pub const PHASE_GUARD: f64 = 0.3;

/// Squeezing level above which sweeps are flagged as beyond current sources.
pub const SQUEEZING_WARNING_DB: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Entangled,
    Product,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Entangled => "entangled",
            Scheme::Product => "product",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "entangled" => Ok(Scheme::Entangled),
            "product" => Ok(Scheme::Product),
            other => Err(format!("unknown scheme `{other}` (expected entangled or product)")),
        }
    }
}

/// Channel transmissivity: one value for every node, or one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Transmissivity {
    Uniform(f64),
    PerNode(Vec<f64>),
}

/// Everything needed to reproduce one displacement-sensing campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNetworkConfig {
    pub num_nodes: usize,
    pub total_photons: f64,
    pub eta: Transmissivity,
    /// Estimator weights; `None` means uniform `1/M`.
    pub weights: Option<Vec<f64>>,
    pub scheme: Scheme,
    pub alpha_true: f64,
    pub seed: u64,
    pub trials: usize,
}

impl SensorNetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 {
            return Err(invalid("M", "must be at least 1"));
        }
        check_photons("N_S", self.total_photons)?;
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if !self.alpha_true.is_finite() {
            return Err(invalid("alpha", "must be finite"));
        }
        self.network().map(|_| ())
    }

    pub fn etas(&self) -> Vec<f64> {
        match &self.eta {
            Transmissivity::Uniform(eta) => vec![*eta; self.num_nodes],
            Transmissivity::PerNode(etas) => etas.clone(),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.num_nodes as f64; self.num_nodes])
    }

    /// Weights and transmissivities as a validated [`WeightedNetwork`].
    pub fn network(&self) -> Result<WeightedNetwork> {
        let etas = self.etas();
        if etas.len() != self.num_nodes {
            return Err(invalid("eta", format!("{} transmissivities for {} nodes", etas.len(), self.num_nodes)));
        }
        let weights = self.weights();
        if weights.len() != self.num_nodes {
            return Err(invalid("weights", format!("{} weights for {} nodes", weights.len(), self.num_nodes)));
        }
        WeightedNetwork::new(weights, etas, self.total_photons)
    }

    fn is_symmetric(&self) -> bool {
        let etas = self.etas();
        let weights = self.weights();
        etas.iter().all(|&e| e == etas[0]) && weights.iter().all(|&w| (w - weights[0]).abs() < 1e-15)
    }
}

/// Monte Carlo statistics of an estimator next to its analytic rms error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub trials: usize,
    pub empirical_mean: f64,
    pub empirical_rms_error: f64,
    /// `empirical_rms_error / √(2·trials)` (Gaussian approximation).
    pub rms_standard_error: f64,
    pub analytic_rms: f64,
    pub scheme: Scheme,
    /// Mean subtracted from the homodyne outcomes (`√η⟨a_m⟩`); zero for
    /// every optimal input since they are zero-mean.
    pub estimator_offset: f64,
}

impl EstimatorReport {
    /// `(empirical − analytic) / standard error`.
    pub fn z_score(&self) -> f64 {
        (self.empirical_rms_error - self.analytic_rms) / self.rms_standard_error
    }
}

fn check_common(num_nodes: usize, total_photons: f64, eta: f64) -> Result<()> {
    if num_nodes == 0 {
        return Err(invalid("M", "must be at least 1"));
    }
    check_photons("N_S", total_photons)?;
    check_transmissivity("eta", eta)
}

/// Entangled-scheme rms error,
/// `½ √[η/(M(√(N_S+1)+√N_S)²) + (1−η)/M]`.
pub fn entangled_rms_error(num_nodes: usize, total_photons: f64, eta: f64) -> Result<f64> {
    check_common(num_nodes, total_photons, eta)?;
    let m = num_nodes as f64;
    Ok(0.5 * (eta / (m * squeeze_gain(total_photons)) + (1.0 - eta) / m).sqrt())
}

/// Product-scheme rms error with `N_S/M` photons per node,
/// `½ √[η/(M(√(N_S/M+1)+√(N_S/M))²) + (1−η)/M]`.
pub fn product_rms_error(num_nodes: usize, total_photons: f64, eta: f64) -> Result<f64> {
    check_common(num_nodes, total_photons, eta)?;
    let m = num_nodes as f64;
    Ok(0.5 * (eta / (m * squeeze_gain(total_photons / m)) + (1.0 - eta) / m).sqrt())
}

pub fn rms_error(scheme: Scheme, num_nodes: usize, total_photons: f64, eta: f64) -> Result<f64> {
    match scheme {
        Scheme::Entangled => entangled_rms_error(num_nodes, total_photons, eta),
        Scheme::Product => product_rms_error(num_nodes, total_photons, eta),
    }
}

/// `10 log₁₀[(δα_P/δα_E)²]`.
pub fn sensitivity_ratio_db(num_nodes: usize, total_photons: f64, eta: f64) -> Result<f64> {
    let ratio = product_rms_error(num_nodes, total_photons, eta)? / entangled_rms_error(num_nodes, total_photons, eta)?;
    Ok(20.0 * ratio.log10())
}

/// Squeezing of a squeezed vacuum with `photons` photons, in dB below vacuum.
pub fn squeezing_db(photons: f64) -> f64 {
    10.0 * squeeze_gain(photons).log10()
}

/// x-squeezed vacuum with `N_S` photons split over `M` nodes by the balanced
/// splitter.
pub fn build_entangled_input(num_nodes: usize, total_photons: f64) -> Result<GaussianState> {
    build_split_input(num_nodes, total_photons, SqueezeAxis::SqueezeX, None)
}

/// Squeezed vacuum on `b₁` plus vacua, through the balanced splitter or, when
/// `coeffs` is given, the splitter with `b₁ ∝ Σ c_m a_m`.
pub fn build_split_input(
    num_nodes: usize,
    total_photons: f64,
    axis: SqueezeAxis,
    coeffs: Option<&[f64]>,
) -> Result<GaussianState> {
    if num_nodes == 0 {
        return Err(invalid("M", "must be at least 1"));
    }
    let mut state = squeezed_vacuum(total_photons, axis)?;
    if num_nodes > 1 {
        state = state.tensor(&vacuum_state(num_nodes - 1)?);
    }
    let splitter = match coeffs {
        None => balanced_splitter(num_nodes)?,
        Some(c) => {
            if c.len() != num_nodes {
                return Err(invalid("coeffs", format!("{} coefficients for {} nodes", c.len(), num_nodes)));
            }
            unbalanced_splitter(c)?
        }
    };
    state.apply(&splitter)
}

/// M-fold product of x-squeezed vacua with `N_S/M` photons each.
pub fn build_product_input(num_nodes: usize, total_photons: f64) -> Result<GaussianState> {
    if num_nodes == 0 {
        return Err(invalid("M", "must be at least 1"));
    }
    check_photons("N_S", total_photons)?;
    build_product_allocation(&vec![total_photons / num_nodes as f64; num_nodes])
}

/// Product of x-squeezed vacua with the given per-node photon numbers.
pub fn build_product_allocation(photons: &[f64]) -> Result<GaussianState> {
    let (first, rest) = photons
        .split_first()
        .ok_or_else(|| invalid("photons", "empty allocation"))?;
    let mut state = squeezed_vacuum(*first, SqueezeAxis::SqueezeX)?;
    for &n in rest {
        state = state.tensor(&squeezed_vacuum(n, SqueezeAxis::SqueezeX)?);
    }
    Ok(state)
}

/// `Var[Re(b₁)]` with `b₁ = Σ_m a_m/√M`, i.e. `(1/M) Σ_mn V_x[m,n]`.
pub fn collective_x_variance(state: &GaussianState) -> f64 {
    let (_, block) = state.quadrature_block(Quadrature::X);
    block.sum() / state.num_modes() as f64
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `trials` independent homodyne shots and maps each joint outcome to an
/// estimate. Trial `t` draws from its own ChaCha stream `(seed, t)`, and the
/// estimates come back in trial order regardless of thread scheduling.
pub fn sample_estimates<F>(sampler: &HomodyneSampler, trials: usize, seed: u64, estimate: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let m = sampler.num_modes();
    (0..trials)
        .into_par_iter()
        .map_init(
            || (vec![0.0; m], vec![0.0; m]),
            |(z, out), t| {
                let mut rng = trial_rng(seed, t);
                sampler.sample_into(&mut rng, z, out);
                estimate(out)
            },
        )
        .collect()
}

fn summarize(estimates: &[f64], truth: f64, analytic_rms: f64, scheme: Scheme) -> EstimatorReport {
    let trials = estimates.len();
    let t = trials as f64;
    let empirical_mean = estimates.iter().sum::<f64>() / t;
    let empirical_rms_error = (estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / t).sqrt();
    EstimatorReport {
        trials,
        empirical_mean,
        empirical_rms_error,
        rms_standard_error: empirical_rms_error / (2.0 * t).sqrt(),
        analytic_rms,
        scheme,
        estimator_offset: 0.0,
    }
}

/// The joint state at the homodyne detectors for a configuration: input per
/// scheme, then per-node loss, then the displacement `α`.
pub fn displacement_protocol_state(cfg: &SensorNetworkConfig) -> Result<GaussianState> {
    let net = cfg.network()?;
    let symmetric = cfg.is_symmetric();
    let input = match cfg.scheme {
        Scheme::Entangled if symmetric => build_entangled_input(cfg.num_nodes, cfg.total_photons)?,
        Scheme::Entangled => {
            let coeffs: Vec<f64> = net
                .weights()
                .iter()
                .zip(net.etas())
                .map(|(w, eta)| w * eta.sqrt())
                .collect();
            build_split_input(cfg.num_nodes, cfg.total_photons, SqueezeAxis::SqueezeX, Some(&coeffs))?
        }
        Scheme::Product if symmetric => build_product_input(cfg.num_nodes, cfg.total_photons)?,
        Scheme::Product => {
            if cfg.total_photons > 0.0 {
                build_product_allocation(&allocate_photons_product(&net)?.photons)?
            } else {
                vacuum_state(cfg.num_nodes)?
            }
        }
    };
    Ok(input
        .apply_loss(&LossChannel::new(cfg.etas())?)?
        .displace_all(cfg.alpha_true))
}

/// Closed-form rms error matching the simulated configuration.
pub fn displacement_analytic_rms(cfg: &SensorNetworkConfig) -> Result<f64> {
    let net = cfg.network()?;
    if cfg.is_symmetric() {
        let eta = cfg.etas()[0];
        if cfg.weights.is_none() || (cfg.weights()[0] - 1.0 / cfg.num_nodes as f64).abs() < 1e-15 {
            return rms_error(cfg.scheme, cfg.num_nodes, cfg.total_photons, eta);
        }
    }
    match cfg.scheme {
        Scheme::Entangled => Ok(weighted_entangled_rms(&net)),
        Scheme::Product if cfg.total_photons > 0.0 => Ok(allocate_photons_product(&net)?.objective),
        Scheme::Product => Ok(net.product_objective(&vec![0.0; cfg.num_nodes])),
    }
}

/// Monte Carlo campaign of the displacement estimator `α̃ = Σ_m w_m x_m`.
pub fn simulate_displacement_protocol(cfg: &SensorNetworkConfig) -> Result<EstimatorReport> {
    cfg.validate()?;
    let state = displacement_protocol_state(cfg)?;
    let sampler = HomodyneSampler::new(&state, Quadrature::X)?;
    let weights = cfg.weights();
    let estimates = sample_estimates(&sampler, cfg.trials, cfg.seed, |x| {
        x.iter().zip(&weights).map(|(xi, w)| w * xi).sum()
    });
    let analytic = displacement_analytic_rms(cfg)?;
    Ok(summarize(&estimates, cfg.alpha_true, analytic, cfg.scheme))
}

/// Least-squares slope of `log₁₀ δα` against `log₁₀ M` at fixed photons per
/// node `n_S` (so `N_S = n_S·M` at each point).
pub fn scaling_exponent(scheme: Scheme, eta: f64, photons_per_node: f64, nodes: &[usize]) -> Result<f64> {
    if nodes.len() < 3 {
        return Err(invalid("M_list", "need at least three node counts"));
    }
    let lo = *nodes.iter().min().unwrap();
    let hi = *nodes.iter().max().unwrap();
    if lo == 0 {
        return Err(invalid("M_list", "node counts must be positive"));
    }
    if (hi as f64) < 100.0 * lo as f64 {
        return Err(invalid("M_list", "node counts must span at least two decades"));
    }
    let points = nodes
        .iter()
        .map(|&m| Ok(((m as f64).log10(), rms_error(scheme, m, photons_per_node * m as f64, eta)?.log10())))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Distributed Mach-Zehnder phase sensing: node `m` interferes its share
/// `a_m` of a p-squeezed vacuum with a coherent probe `|√N_v⟩` on `v_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub num_nodes: usize,
    pub total_photons: f64,
    pub probe_photons: f64,
    pub eta: f64,
    pub phase_shift: f64,
    pub trials: usize,
    pub seed: u64,
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(self.num_nodes, self.total_photons, self.eta)?;
        if !(self.probe_photons > 0.0) || !self.probe_photons.is_finite() {
            return Err(invalid("N_v", "probe photon number must be positive"));
        }
        if !(self.phase_shift.abs() < PHASE_GUARD) {
            return Err(invalid(
                "dphi",
                format!("|{}| is outside the linearization guard {PHASE_GUARD}", self.phase_shift),
            ));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// Linearized phase rms error in its printed form,
/// `(1/√N_v) √[η/(M(√(N_S+1)+√N_S)²) + (1−η)/M]`, i.e. `2δα_E/√N_v`.
pub fn phase_rms_error(num_nodes: usize, total_photons: f64, probe_photons: f64, eta: f64) -> Result<f64> {
    if !(probe_photons > 0.0) {
        return Err(invalid("N_v", "probe photon number must be positive"));
    }
    Ok(2.0 * entangled_rms_error(num_nodes, total_photons, eta)? / probe_photons.sqrt())
}

/// Linearized rms error of `Δφ̃ = 2Σ_m p_m/(√(ηN_v) M)` when the loss acts
/// after the interferometer: the signal is attenuated by `√η` along with the
/// squeezed noise, giving [`phase_rms_error`]`/√η`. The two agree at `η = 1`.
pub fn phase_estimator_rms(num_nodes: usize, total_photons: f64, probe_photons: f64, eta: f64) -> Result<f64> {
    Ok(phase_rms_error(num_nodes, total_photons, probe_photons, eta)? / eta.sqrt())
}

// Per-node Mach-Zehnder on modes (a_m, v_m) at indices (m, M+m):
// c₁ = (a+v)/√2, c₂ = (v−a)/√2, phase e^{−iΔφ} on c₂, then the inverse
// splitter. Exactly a' = e^{−iΔφ/2}[cos(Δφ/2) a + i sin(Δφ/2) v].
fn mach_zehnder_bank(num_nodes: usize, phase_shift: f64) -> Result<SymplecticTransform> {
    let m = num_nodes;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = Complex64::new(0.0, 0.0);
    let mut split = DMatrix::from_element(2 * m, 2 * m, zero);
    let mut phase = DMatrix::from_element(2 * m, 2 * m, zero);
    for k in 0..m {
        let (a, v) = (k, m + k);
        split[(a, a)] = Complex64::new(h, 0.0);
        split[(a, v)] = Complex64::new(h, 0.0);
        split[(v, a)] = Complex64::new(-h, 0.0);
        split[(v, v)] = Complex64::new(h, 0.0);
        phase[(a, a)] = Complex64::new(1.0, 0.0);
        phase[(v, v)] = Complex64::from_polar(1.0, -phase_shift);
    }
    let recombine = split.adjoint();
    let first = SymplecticTransform::from_passive_unitary(&split)?;
    let shift = SymplecticTransform::from_passive_unitary(&phase)?;
    let last = SymplecticTransform::from_passive_unitary(&recombine)?;
    first.then(&shift)?.then(&last)
}

/// State of the `M` signal outputs `a'_m` at the p homodyne detectors.
pub fn phase_output_state(cfg: &PhaseConfig) -> Result<GaussianState> {
    cfg.validate()?;
    let m = cfg.num_nodes;
    let signal = build_split_input(m, cfg.total_photons, SqueezeAxis::SqueezeP, None)?;
    let mut probes = GaussianState::coherent(cfg.probe_photons.sqrt(), 0.0);
    for _ in 1..m {
        probes = probes.tensor(&GaussianState::coherent(cfg.probe_photons.sqrt(), 0.0));
    }
    let mut loss = vec![cfg.eta; m];
    loss.extend(std::iter::repeat(1.0).take(m));
    signal
        .tensor(&probes)
        .apply(&mach_zehnder_bank(m, cfg.phase_shift)?)?
        .apply_loss(&LossChannel::new(loss)?)?
        .marginal(&(0..m).collect::<Vec<_>>())
}

fn phase_estimator_scale(cfg: &PhaseConfig) -> f64 {
    2.0 / ((cfg.eta * cfg.probe_photons).sqrt() * cfg.num_nodes as f64)
}

/// Exact rms error of `Δφ̃` about the true phase, from the output state's
/// p-quadrature moments (variance plus squared bias).
pub fn phase_exact_rms(cfg: &PhaseConfig) -> Result<f64> {
    let state = phase_output_state(cfg)?;
    let scale = phase_estimator_scale(cfg);
    let m = cfg.num_nodes;
    let variance = scale * scale * state.linear_combination_variance(Quadrature::P, &vec![1.0; m])?;
    let mean = scale * (0..m).map(|k| state.mean_p(k)).sum::<f64>();
    Ok((variance + (mean - cfg.phase_shift).powi(2)).sqrt())
}

/// Monte Carlo campaign of the phase estimator on the exact Gaussian model.
/// `analytic_rms` is the linearized [`phase_estimator_rms`].
pub fn simulate_phase_protocol(cfg: &PhaseConfig) -> Result<EstimatorReport> {
    let state = phase_output_state(cfg)?;
    let sampler = HomodyneSampler::new(&state, Quadrature::P)?;
    let scale = phase_estimator_scale(cfg);
    let estimates = sample_estimates(&sampler, cfg.trials, cfg.seed, |p| scale * p.iter().sum::<f64>());
    let analytic = phase_estimator_rms(cfg.num_nodes, cfg.total_photons, cfg.probe_photons, cfg.eta)?;
    Ok(summarize(&estimates, cfg.phase_shift, analytic, Scheme::Entangled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(m: usize, n: f64, eta: f64, scheme: Scheme, alpha: f64, trials: usize) -> SensorNetworkConfig {
        SensorNetworkConfig {
            num_nodes: m,
            total_photons: n,
            eta: Transmissivity::Uniform(eta),
            weights: None,
            scheme,
            alpha_true: alpha,
            seed: 2024,
            trials,
        }
    }

    #[test]
    fn entangled_rms_examples() {
        assert_relative_eq!(entangled_rms_error(1, 0.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(entangled_rms_error(4, 4.0, 1.0).unwrap(), 0.059017, epsilon = 1e-6);
        let v = entangled_rms_error(20, 10.0, 0.9).unwrap();
        assert_relative_eq!(v, 0.5 * (0.9 / (20.0 * 41.97617696340304) + 0.1 / 20.0f64).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(v, 0.038961, epsilon = 1e-6);
        assert!(entangled_rms_error(0, 1.0, 1.0).is_err());
        assert!(entangled_rms_error(2, -1.0, 1.0).is_err());
        assert!(entangled_rms_error(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn product_rms_examples() {
        for (n, eta) in [(3.0, 0.7), (10.0, 1.0), (0.0, 0.4)] {
            assert_relative_eq!(
                product_rms_error(1, n, eta).unwrap(),
                entangled_rms_error(1, n, eta).unwrap(),
                max_relative = 1e-15
            );
        }
        for eta in [0.2, 1.0] {
            assert_relative_eq!(product_rms_error(9, 0.0, eta).unwrap(), 1.0 / 6.0, max_relative = 1e-14);
        }
        let v = product_rms_error(20, 10.0, 0.9).unwrap();
        assert_relative_eq!(v, 0.5 * (0.9 / (20.0 * 3.732050807568877) + 0.1 / 20.0f64).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(v, 0.065303, epsilon = 1e-6);
    }

    #[test]
    fn ratio_examples() {
        assert_relative_eq!(sensitivity_ratio_db(1, 10.0, 0.9).unwrap(), 0.0, epsilon = 1e-13);
        assert_relative_eq!(sensitivity_ratio_db(20, 10.0, 0.9).unwrap(), 4.486, epsilon = 1e-3);
        // Large-M limit is 10 log₁₀ (√11+√10)², near 10 log₁₀(4N_S) = 16.02 dB.
        let far = sensitivity_ratio_db(100_000_000, 10.0, 1.0).unwrap();
        assert_relative_eq!(far, 10.0 * (41.97617696340304 / squeeze_gain(1e-7)).log10(), epsilon = 1e-9);
        assert!((far - 10.0 * 41.97617696340304f64.log10()).abs() < 5e-3);
    }

    #[test]
    fn entangled_input_examples() {
        let one = build_entangled_input(1, 3.0).unwrap();
        assert_eq!(one, squeezed_vacuum(3.0, SqueezeAxis::SqueezeX).unwrap());

        let e2r = 1.0 / squeeze_gain(1.0);
        let two = build_entangled_input(2, 1.0).unwrap();
        assert_relative_eq!(two.cov()[(0, 0)], (e2r + 1.0) / 8.0, epsilon = 1e-15);
        assert_relative_eq!(two.cov()[(0, 1)], (e2r - 1.0) / 8.0, epsilon = 1e-15);
        assert_relative_eq!(squeeze_gain(1.0), (2f64.sqrt() + 1.0).powi(2), max_relative = 1e-15);

        for m in [1, 2, 5, 17] {
            let s = build_entangled_input(m, 2.5).unwrap();
            assert_relative_eq!(collective_x_variance(&s), 0.25 / squeeze_gain(2.5), max_relative = 1e-12);
        }
    }

    #[test]
    fn product_input_examples() {
        assert_eq!(build_product_input(1, 2.0).unwrap(), squeezed_vacuum(2.0, SqueezeAxis::SqueezeX).unwrap());
        let s = build_product_input(4, 4.0).unwrap();
        for k in 0..4 {
            assert_relative_eq!(s.cov()[(k, k)], 1.0 / (4.0 * (2f64.sqrt() + 1.0).powi(2)), max_relative = 1e-14);
        }
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(s.cov()[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn eq2_consistency_over_grid() {
        for m in [1, 2, 3, 8, 25] {
            for n in [0.0, 0.5, 4.0, 30.0] {
                for eta in [0.3, 0.9, 1.0] {
                    let var_b1 = collective_x_variance(&build_entangled_input(m, n).unwrap());
                    let via_state = ((eta * var_b1 + (1.0 - eta) / 4.0) / m as f64).sqrt();
                    assert_relative_eq!(via_state, entangled_rms_error(m, n, eta).unwrap(), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn entangled_dominates_product() {
        for m in [1usize, 2, 3, 7, 20, 100, 1000] {
            for n in [0.0, 0.1, 1.0, 10.0, 100.0] {
                for eta in [0.05, 0.5, 0.9, 0.99, 1.0] {
                    let e = entangled_rms_error(m, n, eta).unwrap();
                    let p = product_rms_error(m, n, eta).unwrap();
                    if m == 1 || n == 0.0 {
                        assert_relative_eq!(e, p, max_relative = 1e-14);
                    } else {
                        assert!(e < p, "M={m} N={n} eta={eta}");
                    }
                }
            }
        }
    }

    #[test]
    fn rms_errors_are_monotone() {
        for scheme in [Scheme::Entangled, Scheme::Product] {
            for m in [1usize, 4, 30] {
                let mut last = f64::INFINITY;
                for eta in [0.1, 0.4, 0.7, 0.95, 1.0] {
                    let v = rms_error(scheme, m, 5.0, eta).unwrap();
                    assert!(v < last);
                    last = v;
                }
                let mut last = f64::INFINITY;
                for n in [0.0, 0.2, 1.0, 8.0, 50.0] {
                    let v = rms_error(scheme, m, n, 0.8).unwrap();
                    assert!(v < last);
                    last = v;
                }
            }
            let mut last = f64::INFINITY;
            for m in [1usize, 2, 5, 10, 100] {
                let v = rms_error(scheme, m, 10.0, 0.9).unwrap();
                assert!(v < last);
                last = v;
            }
        }
    }

    #[test]
    fn splitter_completion_does_not_matter() {
        // Any orthogonal completion of the first row gives the same estimator
        // statistics; rotate rows 2..M by a random orthogonal matrix.
        let m = 5;
        let o = crate::gaussian::orthogonal_completion(&vec![1.0; m]).unwrap();
        let mut rng = trial_rng(99, 0);
        let q = {
            use rand_distr::{Distribution, StandardNormal};
            let g = DMatrix::<f64>::from_fn(m - 1, m - 1, |_, _| StandardNormal.sample(&mut rng));
            g.qr().q()
        };
        let mut alt = o.clone();
        let tail = &q * o.rows(1, m - 1);
        alt.rows_mut(1, m - 1).copy_from(&tail);
        let input = squeezed_vacuum(3.0, SqueezeAxis::SqueezeX).unwrap().tensor(&vacuum_state(m - 1).unwrap());
        let ch = LossChannel::uniform(m, 0.85).unwrap();
        let rms = |mode: &DMatrix<f64>| {
            let s = input
                .apply(&SymplecticTransform::from_mode_matrix(&mode.transpose()).unwrap())
                .unwrap()
                .apply_loss(&ch)
                .unwrap();
            s.linear_combination_variance(Quadrature::X, &vec![1.0 / m as f64; m]).unwrap().sqrt()
        };
        assert!((rms(&o) - rms(&alt)).abs() < 1e-12);
        assert!((rms(&o) - entangled_rms_error(m, 3.0, 0.85).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_small_grid_agrees_and_is_unbiased() {
        for scheme in [Scheme::Entangled, Scheme::Product] {
            for (m, n, eta, alpha) in [(3, 2.0, 1.0, 0.0), (5, 6.0, 0.7, 0.3), (2, 0.0, 0.5, -0.2)] {
                let c = cfg(m, n, eta, scheme, alpha, 100_000);
                let r = simulate_displacement_protocol(&c).unwrap();
                assert!(r.z_score().abs() < 4.0, "{scheme} M={m}: z={}", r.z_score());
                let bias_tol = 5.0 * r.analytic_rms / (r.trials as f64).sqrt();
                assert!((r.empirical_mean - alpha).abs() < bias_tol);
                assert_eq!(r.estimator_offset, 0.0);
            }
        }
    }

    #[test]
    fn campaigns_are_deterministic() {
        let c = cfg(4, 4.0, 0.8, Scheme::Entangled, 0.1, 20_000);
        let a = simulate_displacement_protocol(&c).unwrap();
        let b = simulate_displacement_protocol(&c).unwrap();
        assert_eq!(a, b);
        let mut other = c.clone();
        other.seed += 1;
        assert_ne!(simulate_displacement_protocol(&other).unwrap(), a);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(3, 1.0, 0.9, Scheme::Entangled, 0.0, 0);
        assert!(simulate_displacement_protocol(&c).is_err());
        c.trials = 10;
        c.weights = Some(vec![0.5, 0.5]);
        assert!(c.validate().is_err());
        c.weights = Some(vec![0.5, 0.6, -0.1]);
        assert!(c.validate().is_err());
        c.weights = None;
        c.eta = Transmissivity::PerNode(vec![0.9, 0.8]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn phase_rms_examples() {
        for (m, n, nv, eta) in [(4, 4.0, 100.0, 1.0), (7, 2.0, 9.0, 0.6)] {
            assert_relative_eq!(
                phase_rms_error(m, n, nv, eta).unwrap(),
                2.0 * entangled_rms_error(m, n, eta).unwrap() / nv.sqrt(),
                max_relative = 1e-15
            );
        }
        assert_relative_eq!(phase_rms_error(4, 4.0, 100.0, 1.0).unwrap(), 0.0118034, epsilon = 1e-7);
        assert_relative_eq!(phase_rms_error(6, 0.0, 50.0, 1.0).unwrap(), 1.0 / (300.0f64).sqrt(), max_relative = 1e-14);
        assert!(phase_rms_error(4, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn mach_zehnder_matches_first_order_model() {
        let dphi = 0.05;
        let s = mach_zehnder_bank(1, dphi).unwrap();
        assert!(s.symplectic_deviation() < 1e-12);
        // a' = e^{−iΔφ/2}[cos(Δφ/2) a + i sin(Δφ/2) v]; read off the x row.
        let (c, sn) = ((dphi / 2.0).cos(), (dphi / 2.0).sin());
        let ua = Complex64::from_polar(c, -dphi / 2.0);
        let uv = Complex64::from_polar(1.0, -dphi / 2.0) * Complex64::new(0.0, sn);
        // x_a' row: [Re ua, Re uv, −Im ua, −Im uv] in (x_a, x_v, p_a, p_v).
        let row = s.matrix().row(0);
        assert_relative_eq!(row[0], ua.re, epsilon = 1e-15);
        assert_relative_eq!(row[1], uv.re, epsilon = 1e-15);
        assert_relative_eq!(row[2], -ua.im, epsilon = 1e-15);
        assert_relative_eq!(row[3], -uv.im, epsilon = 1e-15);
    }

    #[test]
    fn phase_estimator_is_unbiased_at_zero_and_tracks_sin() {
        let mut c = PhaseConfig {
            num_nodes: 3,
            total_photons: 2.0,
            probe_photons: 100.0,
            eta: 0.9,
            phase_shift: 0.0,
            trials: 200_000,
            seed: 5,
        };
        let r = simulate_phase_protocol(&c).unwrap();
        assert!(r.empirical_mean.abs() < 5.0 * r.analytic_rms / (r.trials as f64).sqrt());
        c.phase_shift = 0.2;
        let state = phase_output_state(&c).unwrap();
        let mean = phase_estimator_scale(&c) * (0..3).map(|k| state.mean_p(k)).sum::<f64>();
        assert_relative_eq!(mean, 0.2f64.sin(), max_relative = 1e-12);
    }

    #[test]
    fn phase_linearization_limit() {
        // As Δφ → 0 the exact rms tends to the linearized estimator rms.
        for eta in [1.0, 0.7] {
            let c = PhaseConfig {
                num_nodes: 4,
                total_photons: 3.0,
                probe_photons: 64.0,
                eta,
                phase_shift: 1e-6,
                trials: 1,
                seed: 0,
            };
            let lin = phase_estimator_rms(4, 3.0, 64.0, eta).unwrap();
            assert_relative_eq!(phase_exact_rms(&c).unwrap(), lin, max_relative = 1e-9);
        }
    }

    #[test]
    fn phase_guard_and_probe_validation() {
        let mut c = PhaseConfig {
            num_nodes: 2,
            total_photons: 1.0,
            probe_photons: 10.0,
            eta: 1.0,
            phase_shift: 0.3,
            trials: 10,
            seed: 0,
        };
        assert!(simulate_phase_protocol(&c).is_err());
        c.phase_shift = -0.31;
        assert!(c.validate().is_err());
        c.phase_shift = 0.1;
        c.probe_photons = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn scaling_exponent_examples() {
        let nodes = [100, 1000, 10_000];
        let e = scaling_exponent(Scheme::Entangled, 1.0, 1.0, &nodes).unwrap();
        assert!((e + 1.0).abs() < 0.02, "{e}");
        let p = scaling_exponent(Scheme::Product, 1.0, 1.0, &nodes).unwrap();
        assert!((p + 0.5).abs() < 0.02, "{p}");
        let lossy = scaling_exponent(Scheme::Entangled, 0.95, 1.0, &[100_000, 1_000_000, 10_000_000]).unwrap();
        assert!((lossy + 0.5).abs() < 0.02, "{lossy}");
        assert!(scaling_exponent(Scheme::Entangled, 1.0, 1.0, &[10, 100]).is_err());
        assert!(scaling_exponent(Scheme::Entangled, 1.0, 1.0, &[10, 20, 500]).is_err());
    }

    proptest! {
        #[test]
        fn ratio_is_nonnegative(m in 1usize..5000, n in 0.0f64..200.0, eta in 0.01f64..=1.0) {
            prop_assert!(sensitivity_ratio_db(m, n, eta).unwrap() >= -1e-12);
        }
    }
}
