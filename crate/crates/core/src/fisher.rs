//! Quantum Fisher information for displacing single-mode Gaussian states
//! through a pure-loss channel, and the resulting Cramér-Rao bound for
//! separable inputs.
//!
//! The squeezed-thermal parametrization here uses `V_diag =
//! diag((2n+1)e^{−r_B}/4, (2n+1)e^{r_B}/4)`, so `r_B` is twice the squeeze
//! parameter `r` of [`crate::gaussian`] (where the squeezed variance is
//! `e^{−2r}/4`).

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{check_photons, check_transmissivity, invalid, Error, Result};
use crate::gaussian::{squeeze_gain, GaussianState, VACUUM_VARIANCE};

/// Default finite-difference steps for [`fisher_numeric`].
pub const DEFAULT_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

const PURITY_CLAMP: f64 = 1e-12;

/// Rotated squeezed-thermal state: covariance `R_θ V_diag R_θᵀ` with
/// `R_θ = [[cos θ, sin θ], [−sin θ, cos θ]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezedThermalParams {
    pub r_b: f64,
    pub n: f64,
    pub theta: f64,
    pub mean: [f64; 2],
}

impl SqueezedThermalParams {
    pub fn new(r_b: f64, n: f64, theta: f64, mean: [f64; 2]) -> Result<Self> {
        if !(r_b >= 0.0) || !r_b.is_finite() {
            return Err(invalid("r_b", format!("{r_b} must be finite and nonnegative")));
        }
        check_photons("n", n)?;
        if !theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        Ok(Self {
            r_b,
            n,
            theta: theta.rem_euclid(std::f64::consts::PI),
            mean,
        })
    }

    pub fn vacuum() -> Self {
        Self {
            r_b: 0.0,
            n: 0.0,
            theta: 0.0,
            mean: [0.0, 0.0],
        }
    }

    /// Pure squeezed vacuum whose x variance is `e^{−2r}/4`.
    pub fn from_squeeze(r: f64) -> Result<Self> {
        Self::new(2.0 * r, 0.0, 0.0, [0.0, 0.0])
    }

    pub fn covariance(&self) -> Matrix2<f64> {
        let nu = 2.0 * self.n + 1.0;
        let (a, b) = (nu * (-self.r_b).exp() / 4.0, nu * self.r_b.exp() / 4.0);
        let (s, c) = self.theta.sin_cos();
        Matrix2::new(c * c * a + s * s * b, c * s * (b - a), c * s * (b - a), s * s * a + c * c * b)
    }

    /// `aᵀa + [(2n+1) cosh r_B − 1]/2`.
    pub fn photon_number(&self) -> f64 {
        self.mean[0].powi(2) + self.mean[1].powi(2)
            + 0.5 * ((2.0 * self.n + 1.0) * self.r_b.cosh() - 1.0)
    }

    pub fn state(&self) -> Result<GaussianState> {
        let v = self.covariance();
        GaussianState::single_mode(self.mean, [[v[(0, 0)], v[(0, 1)]], [v[(1, 0)], v[(1, 1)]]])
    }

    /// The state after a pure-loss channel and an x displacement `α`:
    /// mean `√η a + (α, 0)`, covariance `ηV + (1−η)I/4`.
    pub fn lossy_state(&self, eta: f64, alpha: f64) -> Result<GaussianState> {
        check_transmissivity("eta", eta)?;
        let v = self.covariance() * eta + Matrix2::identity() * ((1.0 - eta) * VACUUM_VARIANCE);
        let root = eta.sqrt();
        GaussianState::single_mode(
            [root * self.mean[0] + alpha, root * self.mean[1]],
            [[v[(0, 0)], v[(0, 1)]], [v[(1, 0)], v[(1, 1)]]],
        )
    }
}

fn as_matrix2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Closed-form Uhlmann fidelity between single-mode Gaussian states,
///
/// `F = 2 / (√(Δ+δ) − √δ) · exp(−½ dᵀ (V₁+V₂)⁻¹ d)`,
///
/// with `Δ = 16 det(V₁+V₂)`, `δ = (16 det V₁ − 1)(16 det V₂ − 1)` in the
/// vacuum-variance-1/4 convention. Purity factors within 1e-12 of zero are
/// clamped to zero.
pub fn gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    Ok(log_gaussian_fidelity(a, b)?.exp())
}

fn log_gaussian_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.num_modes() != 1 || b.num_modes() != 1 {
        return Err(invalid("state", "closed-form fidelity is single-mode only"));
    }
    let (va, vb) = (as_matrix2(a.cov()), as_matrix2(b.cov()));
    let purity_factor = |v: &Matrix2<f64>| {
        let f = 16.0 * v.determinant() - 1.0;
        if f < 0.0 && f > -PURITY_CLAMP {
            Ok(0.0)
        } else if f < 0.0 {
            Err(Error::Unphysical { min_eigenvalue: f })
        } else {
            Ok(f)
        }
    };
    let delta_small = purity_factor(&va)? * purity_factor(&vb)?;
    let sum = va + vb;
    let delta = 16.0 * sum.determinant();
    let d = Vector2::new(b.mean()[0] - a.mean()[0], b.mean()[1] - a.mean()[1]);
    let inv = sum.try_inverse().ok_or(Error::Unphysical { min_eigenvalue: 0.0 })?;
    let exponent = -0.5 * d.dot(&(inv * d));
    // 2/(√(Δ+δ) − √δ) = 2(√(Δ+δ) + √δ)/Δ
    let prefactor = 2.0 * ((delta + delta_small).sqrt() + delta_small.sqrt()) / delta;
    Ok(prefactor.ln() + exponent)
}

/// Fisher information from the fidelity decay,
/// `lim_{ε→0} 8{1 − √F[ρ(α), ρ(α+ε)]}/ε²`, on the lossy displaced state.
///
/// The quotient is evaluated at each step in `steps` (strictly decreasing,
/// within (1e-6, 1e-1)) and extrapolated to `ε → 0` by Neville's scheme in
/// `ε²`.
pub fn fisher_numeric(params: &SqueezedThermalParams, eta: f64, alpha: f64, steps: &[f64]) -> Result<f64> {
    if steps.len() < 2 {
        return Err(invalid("steps", "need at least two finite-difference steps"));
    }
    for w in steps.windows(2) {
        if !(w[1] < w[0]) {
            return Err(invalid("steps", "steps must be strictly decreasing"));
        }
    }
    if steps.iter().any(|&e| !(e > 1e-6 && e < 1e-1)) {
        return Err(invalid("steps", "steps must lie in (1e-6, 1e-1)"));
    }
    let base = params.lossy_state(eta, alpha)?;
    let quotients = steps
        .iter()
        .map(|&eps| {
            let shifted = params.lossy_state(eta, alpha + eps)?;
            let half_log = 0.5 * log_gaussian_fidelity(&base, &shifted)?;
            Ok(-8.0 * half_log.exp_m1() / (eps * eps))
        })
        .collect::<Result<Vec<f64>>>()?;
    let t: Vec<f64> = steps.iter().map(|e| e * e).collect();
    let diagonal = neville_to_zero(&t, &quotients);
    let scale = diagonal.last().copied().unwrap_or(0.0).abs().max(1.0);
    let changes: Vec<f64> = diagonal.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for w in changes.windows(2) {
        if w[1] > w[0] && w[1] > 1e-12 * scale {
            return Err(Error::NonConvergence {
                what: "fisher_numeric Richardson extrapolation",
                iterations: steps.len(),
                residual: w[1],
            });
        }
    }
    Ok(*diagonal.last().unwrap())
}

// Successive polynomial extrapolations of (t_i, y_i) to t = 0, using the
// first 1, 2, … points.
fn neville_to_zero(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut table = y.to_vec();
    let mut diagonal = vec![table[0]];
    for level in 1..n {
        for i in (level..n).rev() {
            let (ti, tj) = (t[i], t[i - level]);
            table[i] = (ti * table[i - 1] - tj * table[i]) / (ti - tj);
        }
        diagonal.push(table[level]);
    }
    diagonal
}

/// Closed-form Fisher information of the lossy squeezed-thermal state,
///
/// `4{e^{r}(1−η) + (2n+1)η[e^{2r}cos²θ + sin²θ]} /
///  {(e^{r}(1−η) + (2n+1)η)[(2n+1)η e^{r} + 1−η]}` with `r = r_B`.
pub fn fisher_closed_form(params: &SqueezedThermalParams, eta: f64) -> Result<f64> {
    check_transmissivity("eta", eta)?;
    let nu = 2.0 * params.n + 1.0;
    let er = params.r_b.exp();
    let (s, c) = params.theta.sin_cos();
    let numerator = 4.0 * (er * (1.0 - eta) + nu * eta * (er * er * c * c + s * s));
    let denominator = (er * (1.0 - eta) + nu * eta) * (nu * eta * er + 1.0 - eta);
    Ok(numerator / denominator)
}

/// Maximum Fisher information at a fixed photon budget, with its maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMaximum {
    pub value: f64,
    pub argmax: SqueezedThermalParams,
}

/// `[η/(4(√(N+1)+√N)²) + (1−η)/4]⁻¹`, attained by a zero-mean pure state
/// squeezed in x with `cosh r_B = 2N + 1`.
pub fn fisher_max(photons: f64, eta: f64) -> Result<FisherMaximum> {
    check_photons("photons", photons)?;
    check_transmissivity("eta", eta)?;
    let value = 1.0 / (eta / (4.0 * squeeze_gain(photons)) + (1.0 - eta) / 4.0);
    let argmax = SqueezedThermalParams {
        r_b: (2.0 * photons + 1.0).acosh(),
        n: 0.0,
        theta: 0.0,
        mean: [0.0, 0.0],
    };
    Ok(FisherMaximum { value, argmax })
}

/// Fisher information of a product state is the sum over its factors.
pub fn product_fisher(per_node: &[f64]) -> f64 {
    per_node.iter().sum()
}

/// Cramér-Rao bound for `M` nodes fed a Gaussian separable state with total
/// photon number `N_S`, attained by the equal split `N_m = N_S/M`:
/// `1/√(M · max I_F(N_S/M))`.
pub fn cr_bound_separable(num_nodes: usize, total_photons: f64, eta: f64) -> Result<f64> {
    if num_nodes == 0 {
        return Err(invalid("num_nodes", "must be at least 1"));
    }
    check_photons("total_photons", total_photons)?;
    let per_node = fisher_max(total_photons / num_nodes as f64, eta)?.value;
    Ok(1.0 / (num_nodes as f64 * per_node).sqrt())
}

/// Cramér-Rao bound of the split-squeezed-vacuum state. The common
/// displacement only moves the collective mode `b₁` (by `√M α`), so the
/// Fisher information is `M · max I_F(N_S)`.
pub fn cr_bound_entangled(num_nodes: usize, total_photons: f64, eta: f64) -> Result<f64> {
    if num_nodes == 0 {
        return Err(invalid("num_nodes", "must be at least 1"));
    }
    let collective = fisher_max(total_photons, eta)?.value;
    Ok(1.0 / (num_nodes as f64 * collective).sqrt())
}
