//! Exact Gaussian-state engine.
//!
//! Quadratures are `x = Re(a)` and `p = Im(a)`, stored in xxpp order
//! `(x₁,…,x_M, p₁,…,p_M)`. The vacuum covariance is `I/4` and the symplectic
//! form is `Ω = [[0, I], [−I, 0]]`, so a passive linear-optics network with
//! real mode matrix `O` acts as `diag(O, O)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_photons, check_transmissivity, invalid, Error, Result};

/// Vacuum variance of a single quadrature.
pub const VACUUM_VARIANCE: f64 = 0.25;

const SYMMETRY_TOL: f64 = 1e-12;
const PHYSICALITY_TOL: f64 = 1e-10;
const SYMPLECTIC_TOL: f64 = 1e-10;
const GRAM_SCHMIDT_SKIP: f64 = 1e-8;
const SAMPLING_EIGEN_FLOOR: f64 = 1e-14;

/// Which quadrature a single-mode squeezer reduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezeAxis {
    SqueezeX,
    SqueezeP,
}

/// Quadrature selected by a homodyne detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

/// `(√(N+1) + √N)²`, the inverse of the squeezed-quadrature variance (in vacuum
/// units) of a squeezed vacuum with mean photon number `N`. Equals `e^{2r}` with
/// `sinh²r = N`.
pub fn squeeze_gain(photons: f64) -> f64 {
    let s = (photons + 1.0).sqrt() + photons.sqrt();
    s * s
}

/// The symplectic form `Ω` for `num_modes` modes in xxpp order.
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let n = 2 * num_modes;
    DMatrix::from_fn(n, n, |i, j| {
        if i < num_modes && j == i + num_modes {
            1.0
        } else if i >= num_modes && j + num_modes == i {
            -1.0
        } else {
            0.0
        }
    })
}

/// Mean vector and covariance matrix of an `M`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateDump", try_from = "StateDump")]
pub struct GaussianState {
    num_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// JSON debugging dump of a [`GaussianState`]: `cov` is row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDump {
    pub num_modes: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

impl From<GaussianState> for StateDump {
    fn from(state: GaussianState) -> Self {
        let n = 2 * state.num_modes;
        let cov = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| state.cov[(i, j)])
            .collect();
        StateDump {
            num_modes: state.num_modes,
            mean: state.mean.iter().copied().collect(),
            cov,
        }
    }
}

impl TryFrom<StateDump> for GaussianState {
    type Error = Error;

    fn try_from(dump: StateDump) -> Result<Self> {
        let n = 2 * dump.num_modes;
        if dump.cov.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: dump.cov.len(),
            });
        }
        GaussianState::new(
            DVector::from_vec(dump.mean),
            DMatrix::from_row_slice(n, n, &dump.cov),
        )
    }
}

impl GaussianState {
    /// Builds a validated state: `cov` must be symmetric and satisfy
    /// `cov + iΩ/4 ⪰ 0`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 || n % 2 != 0 {
            return Err(invalid("mean", format!("length {n} is not a positive even number")));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: cov.nrows().max(cov.ncols()),
            });
        }
        let scale = cov.amax().max(1.0);
        let asymmetry = (&cov - cov.transpose()).amax();
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let num_modes = n / 2;
        let cov = (&cov + cov.transpose()) * 0.5;
        let min_eigenvalue = uncertainty_min_eigenvalue(&cov);
        if min_eigenvalue < -PHYSICALITY_TOL * scale {
            return Err(Error::Unphysical { min_eigenvalue });
        }
        Ok(Self {
            num_modes,
            mean,
            cov,
        })
    }

    // Results of physical operations on physical states need no revalidation.
    fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        let num_modes = mean.len() / 2;
        Self {
            num_modes,
            mean,
            cov,
        }
    }

    /// Single-mode state with the given `(x, p)` mean and 2×2 covariance.
    pub fn single_mode(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        Self::new(
            DVector::from_row_slice(&mean),
            DMatrix::from_row_slice(2, 2, &[cov[0][0], cov[0][1], cov[1][0], cov[1][1]]),
        )
    }

    /// Coherent state `|x + ip⟩`.
    pub fn coherent(x: f64, p: f64) -> Self {
        Self::from_parts(
            DVector::from_row_slice(&[x, p]),
            DMatrix::identity(2, 2) * VACUUM_VARIANCE,
        )
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn mean_x(&self, mode: usize) -> f64 {
        self.mean[mode]
    }

    pub fn mean_p(&self, mode: usize) -> f64 {
        self.mean[self.num_modes + mode]
    }

    /// Total mean photon number `Σ_m (V_xx + V_pp − 1/2 + x̄² + p̄²)`.
    pub fn mean_photon_number(&self) -> f64 {
        let m = self.num_modes;
        (0..m)
            .map(|k| {
                self.cov[(k, k)] + self.cov[(m + k, m + k)] - 0.5
                    + self.mean[k].powi(2)
                    + self.mean[m + k].powi(2)
            })
            .sum()
    }

    /// Mean and covariance restricted to one quadrature block.
    pub fn quadrature_block(&self, quadrature: Quadrature) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.num_modes;
        let offset = match quadrature {
            Quadrature::X => 0,
            Quadrature::P => m,
        };
        (
            self.mean.rows(offset, m).into_owned(),
            self.cov.view((offset, offset), (m, m)).into_owned(),
        )
    }

    /// Variance of `Σ_m w_m q_m` for the selected quadrature.
    pub fn linear_combination_variance(&self, quadrature: Quadrature, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                actual: weights.len(),
            });
        }
        let (_, block) = self.quadrature_block(quadrature);
        let w = DVector::from_row_slice(weights);
        Ok(w.dot(&(&block * &w)))
    }

    /// Tensor product `self ⊗ other`, with `self`'s modes first.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let (ma, mb) = (self.num_modes, other.num_modes);
        let m = ma + mb;
        // Index of each source quadrature in the combined xxpp layout.
        let place_a = |i: usize| if i < ma { i } else { m + (i - ma) };
        let place_b = |i: usize| if i < mb { ma + i } else { m + ma + (i - mb) };
        let mut mean = DVector::zeros(2 * m);
        let mut cov = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..2 * ma {
            mean[place_a(i)] = self.mean[i];
            for j in 0..2 * ma {
                cov[(place_a(i), place_a(j))] = self.cov[(i, j)];
            }
        }
        for i in 0..2 * mb {
            mean[place_b(i)] = other.mean[i];
            for j in 0..2 * mb {
                cov[(place_b(i), place_b(j))] = other.cov[(i, j)];
            }
        }
        GaussianState::from_parts(mean, cov)
    }

    /// Reduced state of the listed modes, in the listed order.
    pub fn marginal(&self, modes: &[usize]) -> Result<GaussianState> {
        if modes.is_empty() {
            return Err(invalid("modes", "empty mode list"));
        }
        if let Some(&bad) = modes.iter().find(|&&k| k >= self.num_modes) {
            return Err(invalid("modes", format!("mode {bad} out of range for {} modes", self.num_modes)));
        }
        let m = self.num_modes;
        let idx: Vec<usize> = modes.iter().copied().chain(modes.iter().map(|k| k + m)).collect();
        let mean = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        Ok(GaussianState::from_parts(mean, cov))
    }

    /// `mean ← S·mean + d`, `cov ← S·cov·Sᵀ`.
    pub fn apply(&self, t: &SymplecticTransform) -> Result<GaussianState> {
        if t.num_modes() != self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                actual: t.num_modes(),
            });
        }
        let s = &t.matrix;
        let mean = s * &self.mean + &t.displacement;
        let cov = s * &self.cov * s.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(GaussianState::from_parts(mean, cov))
    }

    /// Pure-loss channel on every mode: `mean ← D·mean`,
    /// `cov ← D·cov·D + (I − D²)/4` with `D = diag(√η_m)` over both blocks.
    pub fn apply_loss(&self, channel: &LossChannel) -> Result<GaussianState> {
        let m = self.num_modes;
        if channel.transmissivities.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: channel.transmissivities.len(),
            });
        }
        let root: Vec<f64> = (0..2 * m)
            .map(|i| channel.transmissivities[i % m].sqrt())
            .collect();
        let mean = DVector::from_fn(2 * m, |i, _| root[i] * self.mean[i]);
        let mut cov = DMatrix::from_fn(2 * m, 2 * m, |i, j| root[i] * root[j] * self.cov[(i, j)]);
        for i in 0..2 * m {
            cov[(i, i)] += (1.0 - root[i] * root[i]) * VACUUM_VARIANCE;
        }
        Ok(GaussianState::from_parts(mean, cov))
    }

    /// Adds the same real displacement `α` to every mode's x quadrature.
    pub fn displace_all(&self, alpha: f64) -> GaussianState {
        let mut mean = self.mean.clone();
        for k in 0..self.num_modes {
            mean[k] += alpha;
        }
        GaussianState::from_parts(mean, self.cov.clone())
    }

    /// Displaces every quadrature by the given vector (length `2M`).
    pub fn displace(&self, d: &[f64]) -> Result<GaussianState> {
        if d.len() != 2 * self.num_modes {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.num_modes,
                actual: d.len(),
            });
        }
        Ok(GaussianState::from_parts(
            &self.mean + DVector::from_row_slice(d),
            self.cov.clone(),
        ))
    }

    /// Thermal occupation, squeezing and orientation of a single-mode state.
    pub fn single_mode_decomposition(&self) -> Result<SingleModeDecomposition> {
        if self.num_modes != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: self.num_modes,
            });
        }
        let (a, b, c) = (self.cov[(0, 0)], self.cov[(1, 1)], self.cov[(0, 1)]);
        let half_trace = 0.5 * (a + b);
        let gap = (0.25 * (a - b).powi(2) + c * c).sqrt();
        let small = half_trace - gap;
        let large = half_trace + gap;
        let det = (a * b - c * c).max(0.0);
        // ν = 4√det, clamped at the pure-state floor.
        let nu = (4.0 * det.sqrt()).max(1.0);
        // Direction of the small eigenvalue.
        let angle = if gap < 1e-15 {
            0.0
        } else {
            0.5 * (2.0 * c).atan2(a - b) + std::f64::consts::FRAC_PI_2
        };
        let squeeze = if gap < 1e-15 {
            0.0
        } else {
            0.25 * (large / small).ln()
        };
        Ok(SingleModeDecomposition {
            thermal: 0.5 * (nu - 1.0),
            squeeze,
            angle: angle.rem_euclid(std::f64::consts::PI),
            mean: [self.mean[0], self.mean[1]],
        })
    }
}

/// Single-mode Gaussian state written as `D(β) R(ψ) S(s) ρ_th(n)`: covariance
/// `R(ψ) diag((2n+1)e^{−2s}/4, (2n+1)e^{2s}/4) R(ψ)ᵀ` where `R(ψ)` rotates the x
/// axis onto the squeezed direction `(cos ψ, sin ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleModeDecomposition {
    pub thermal: f64,
    pub squeeze: f64,
    pub angle: f64,
    pub mean: [f64; 2],
}

impl SingleModeDecomposition {
    /// Symplectic map (linear part only) taking the state's covariance to
    /// `(2n+1)I/4`.
    pub fn whitening_transform(&self) -> SymplecticTransform {
        let (sn, cs) = self.angle.sin_cos();
        let es = self.squeeze.exp();
        // diag(e^{s}, e^{−s}) · R(ψ)ᵀ
        let matrix = DMatrix::from_row_slice(2, 2, &[es * cs, es * sn, -sn / es, cs / es]);
        SymplecticTransform {
            matrix,
            displacement: DVector::zeros(2),
        }
    }
}

fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows();
    let omega = symplectic_form(n / 2);
    let h = DMatrix::from_fn(n, n, |i, j| Complex64::new(cov[(i, j)], 0.25 * omega[(i, j)]));
    h.symmetric_eigenvalues().min()
}

/// Symplectic matrix `S` and displacement `d`, acting as `r ↦ S r + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticTransform {
    /// Validates `SΩSᵀ = Ω` to 1e-10 elementwise.
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n % 2 != 0 || matrix.ncols() != n {
            return Err(invalid("matrix", format!("{}x{} is not a 2M x 2M matrix", n, matrix.ncols())));
        }
        if displacement.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: displacement.len(),
            });
        }
        let t = Self {
            matrix,
            displacement,
        };
        let deviation = t.symplectic_deviation();
        if deviation > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic { deviation });
        }
        Ok(t)
    }

    pub fn identity(num_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * num_modes, 2 * num_modes),
            displacement: DVector::zeros(2 * num_modes),
        }
    }

    pub fn displacement_only(d: DVector<f64>) -> Result<Self> {
        let n = d.len();
        Self::new(DMatrix::identity(n, n), d)
    }

    /// Passive network with real orthogonal mode matrix `O`: `a ↦ O a`.
    pub fn from_mode_matrix(mode_matrix: &DMatrix<f64>) -> Result<Self> {
        let m = mode_matrix.nrows();
        if mode_matrix.ncols() != m {
            return Err(invalid("mode_matrix", "not square"));
        }
        let mut s = DMatrix::zeros(2 * m, 2 * m);
        s.view_mut((0, 0), (m, m)).copy_from(mode_matrix);
        s.view_mut((m, m), (m, m)).copy_from(mode_matrix);
        Self::new(s, DVector::zeros(2 * m))
    }

    /// Passive network with unitary mode matrix `U = X + iY`: `a ↦ U a`, so
    /// `x ↦ Xx − Yp`, `p ↦ Yx + Xp`.
    pub fn from_passive_unitary(unitary: &DMatrix<Complex64>) -> Result<Self> {
        let m = unitary.nrows();
        if unitary.ncols() != m {
            return Err(invalid("unitary", "not square"));
        }
        let s = DMatrix::from_fn(2 * m, 2 * m, |i, j| {
            let u = unitary[(i % m, j % m)];
            match (i < m, j < m) {
                (true, true) | (false, false) => u.re,
                (true, false) => -u.im,
                (false, true) => u.im,
            }
        });
        Self::new(s, DVector::zeros(2 * m))
    }

    /// Single-mode squeezer reducing the given quadrature's variance by `e^{−2r}`.
    pub fn squeezer(r: f64, axis: SqueezeAxis) -> Self {
        let (gx, gp) = match axis {
            SqueezeAxis::SqueezeX => ((-r).exp(), r.exp()),
            SqueezeAxis::SqueezeP => (r.exp(), (-r).exp()),
        };
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[gx, 0.0, 0.0, gp]),
            displacement: DVector::zeros(2),
        }
    }

    pub fn num_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// `max |SΩSᵀ − Ω|`.
    pub fn symplectic_deviation(&self) -> f64 {
        let omega = symplectic_form(self.num_modes());
        (&self.matrix * &omega * self.matrix.transpose() - omega).amax()
    }

    /// `then ∘ self`: apply `self` first.
    pub fn then(&self, then: &SymplecticTransform) -> Result<Self> {
        if then.num_modes() != self.num_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes(),
                actual: then.num_modes(),
            });
        }
        Ok(Self {
            matrix: &then.matrix * &self.matrix,
            displacement: &then.matrix * &self.displacement + &then.displacement,
        })
    }

    /// Inverse `r ↦ S⁻¹(r − d)`, with `S⁻¹ = −ΩSᵀΩ`.
    pub fn inverse(&self) -> Self {
        let omega = symplectic_form(self.num_modes());
        let inv = -(&omega * self.matrix.transpose() * &omega);
        let displacement = -(&inv * &self.displacement);
        Self {
            matrix: inv,
            displacement,
        }
    }
}

/// Per-mode pure-loss channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    transmissivities: Vec<f64>,
}

impl LossChannel {
    pub fn new(transmissivities: Vec<f64>) -> Result<Self> {
        if transmissivities.is_empty() {
            return Err(invalid("transmissivities", "empty"));
        }
        for &eta in &transmissivities {
            check_transmissivity("transmissivities", eta)?;
        }
        Ok(Self { transmissivities })
    }

    pub fn uniform(num_modes: usize, eta: f64) -> Result<Self> {
        Self::new(vec![eta; num_modes])
    }

    pub fn transmissivities(&self) -> &[f64] {
        &self.transmissivities
    }
}

/// `M`-mode vacuum: zero mean, covariance `I/4`.
pub fn vacuum_state(num_modes: usize) -> Result<GaussianState> {
    if num_modes == 0 {
        return Err(invalid("num_modes", "must be at least 1"));
    }
    Ok(GaussianState::from_parts(
        DVector::zeros(2 * num_modes),
        DMatrix::identity(2 * num_modes, 2 * num_modes) * VACUUM_VARIANCE,
    ))
}

/// Single-mode squeezed vacuum with mean photon number `photons = sinh²r`.
pub fn squeezed_vacuum(photons: f64, axis: SqueezeAxis) -> Result<GaussianState> {
    check_photons("photons", photons)?;
    let gain = squeeze_gain(photons);
    let (vx, vp) = match axis {
        SqueezeAxis::SqueezeX => (VACUUM_VARIANCE / gain, VACUUM_VARIANCE * gain),
        SqueezeAxis::SqueezeP => (VACUUM_VARIANCE * gain, VACUUM_VARIANCE / gain),
    };
    Ok(GaussianState::from_parts(
        DVector::zeros(2),
        DMatrix::from_row_slice(2, 2, &[vx, 0.0, 0.0, vp]),
    ))
}

/// Orthonormal completion of `first_row`: row 0 is `first_row/|first_row|`, the
/// rest come from Gram-Schmidt over the standard basis in index order, skipping
/// candidates whose residual norm falls below 1e-8.
pub fn orthogonal_completion(first_row: &[f64]) -> Result<DMatrix<f64>> {
    let m = first_row.len();
    if m == 0 {
        return Err(invalid("coeffs", "empty coefficient vector"));
    }
    let norm = first_row.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(invalid("coeffs", "coefficient vector must be nonzero and finite"));
    }
    let mut rows: Vec<DVector<f64>> = vec![DVector::from_iterator(m, first_row.iter().map(|c| c / norm))];
    for k in 0..m {
        if rows.len() == m {
            break;
        }
        let mut v = DVector::zeros(m);
        v[k] = 1.0;
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for row in &rows {
                let proj = row.dot(&v);
                v.axpy(-proj, row, 1.0);
            }
        }
        let n = v.norm();
        if n > GRAM_SCHMIDT_SKIP {
            rows.push(v / n);
        }
    }
    debug_assert_eq!(rows.len(), m);
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

/// `M`-port balanced splitter whose output modes satisfy `b₁ = Σ_m a_m/√M`.
///
/// The returned transform maps the input modes `b` to the outputs
/// `a = Oᵀ b`, where `O` is [`orthogonal_completion`] of the all-ones row.
pub fn balanced_splitter(num_modes: usize) -> Result<SymplecticTransform> {
    if num_modes == 0 {
        return Err(invalid("num_modes", "must be at least 1"));
    }
    unbalanced_splitter(&vec![1.0; num_modes])
}

/// Splitter whose outputs satisfy `b₁ = Σ_m c_m a_m / |c|`.
pub fn unbalanced_splitter(coeffs: &[f64]) -> Result<SymplecticTransform> {
    let o = orthogonal_completion(coeffs)?;
    SymplecticTransform::from_mode_matrix(&o.transpose())
}

/// Factorised homodyne sampler for one quadrature block of a state.
#[derive(Debug, Clone)]
pub struct HomodyneSampler {
    mean: DVector<f64>,
    // Column-major factor L with L Lᵀ equal to the block covariance.
    factor: DMatrix<f64>,
}

impl HomodyneSampler {
    pub fn new(state: &GaussianState, quadrature: Quadrature) -> Result<Self> {
        let (mean, block) = state.quadrature_block(quadrature);
        let eig = block.symmetric_eigen();
        let scale = eig.eigenvalues.amax().max(1.0);
        let min_eigenvalue = eig.eigenvalues.min();
        if min_eigenvalue < -SAMPLING_EIGEN_FLOOR * scale {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        let mut factor = eig.eigenvectors;
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let root = lambda.max(0.0).sqrt();
            factor.column_mut(j).scale_mut(root);
        }
        Ok(Self { mean, factor })
    }

    pub fn num_modes(&self) -> usize {
        self.mean.len()
    }

    /// Draws one joint sample into `out`, using `z` as scratch (both length `M`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        let m = self.mean.len();
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        out.copy_from_slice(self.mean.as_slice());
        let data = self.factor.as_slice();
        for (j, &zj) in z.iter().enumerate() {
            let col = &data[j * m..(j + 1) * m];
            for (o, &l) in out.iter_mut().zip(col) {
                *o += l * zj;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let m = self.mean.len();
        let mut z = vec![0.0; m];
        let mut out = vec![0.0; m];
        self.sample_into(rng, &mut z, &mut out);
        DVector::from_vec(out)
    }
}

/// One joint homodyne sample of the selected quadrature of every mode.
pub fn homodyne_sample<R: Rng + ?Sized>(
    state: &GaussianState,
    quadrature: Quadrature,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(HomodyneSampler::new(state, quadrature)?.sample(rng))
}
