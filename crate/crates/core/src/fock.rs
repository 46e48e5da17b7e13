//! Truncated Fock-space representation of single-mode Gaussian states.
//!
//! Density matrices are built by conjugating a thermal state with truncated
//! squeeze and displacement unitaries, each computed as `exp(iH)` from a
//! Hermitian eigendecomposition in a working space larger than the retained
//! cutoff. The Uhlmann fidelity is then evaluated by brute force, which makes
//! this module a reference for the closed-form Gaussian fidelity.
//!
//! Every operator keeps a factor `B` with `ρ = B B†`. For Gaussian states the
//! factor is `P U √ρ_th` and is exact, so `√F = ‖B₁† B₂‖₁` (sum of singular
//! values) never takes square roots of round-off-level eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;

/// Default Fock cutoff.
pub const DEFAULT_CUTOFF: usize = 60;

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const MAX_TRACE_DEFICIT: f64 = 1e-8;

/// Density operator truncated to the first `cutoff` number states.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    cutoff: usize,
    matrix: DMatrix<Complex64>,
    factor: DMatrix<Complex64>,
}

impl FockOperator {
    /// Validates Hermiticity (1e-10) and positivity (eigenvalues ≥ −1e-10).
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let cutoff = matrix.nrows();
        if matrix.ncols() != cutoff || cutoff == 0 {
            return Err(invalid("matrix", "density matrix must be square and nonempty"));
        }
        let asymmetry = (&matrix - matrix.adjoint()).camax();
        if asymmetry > HERMITIAN_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        let factor = hermitian_sqrt(&matrix)?;
        Ok(Self {
            cutoff,
            matrix,
            factor,
        })
    }

    // `factor` must satisfy `factor · factor† = matrix`.
    fn from_factor(factor: DMatrix<Complex64>) -> Self {
        let matrix = &factor * factor.adjoint();
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Self {
            cutoff: factor.nrows(),
            matrix,
            factor,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Probability of `n` photons.
    pub fn photon_probability(&self, n: usize) -> f64 {
        self.matrix[(n, n)].re
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.cutoff).map(|n| n as f64 * self.matrix[(n, n)].re).sum()
    }

    /// `U ρ U†` for a unitary of matching dimension.
    pub fn conjugate(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.nrows() != self.cutoff || unitary.ncols() != self.cutoff {
            return Err(Error::DimensionMismatch {
                expected: self.cutoff,
                actual: unitary.nrows(),
            });
        }
        Ok(Self::from_factor(unitary * &self.factor))
    }

    /// Quadrature mean `(x̄, p̄)` and covariance from `⟨a⟩`, `⟨a²⟩`, `⟨a†a⟩`,
    /// with `x = (a + a†)/2`, `p = (a − a†)/2i`.
    pub fn quadrature_moments(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let a = annihilation(self.cutoff);
        let a1 = (&self.matrix * &a).trace();
        let a2 = (&self.matrix * &a * &a).trace();
        let n = self.mean_photon_number();
        let (x, p) = (a1.re, a1.im);
        let xx = 0.25 * (2.0 * a2.re + 2.0 * n + 1.0) - x * x;
        let pp = 0.25 * (-2.0 * a2.re + 2.0 * n + 1.0) - p * p;
        let xp = 0.5 * a2.im - x * p;
        ([x, p], [[xx, xp], [xp, pp]])
    }
}

/// Truncated annihilation operator `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

// exp(G) for anti-Hermitian G, via the Hermitian H = −iG.
fn exp_anti_hermitian(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let h = g.map(|z| -i * z);
    let h = (&h + h.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let q = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, l)));
    q * phases * q.adjoint()
}

/// Truncated displacement `D(β) = exp(β a† − β* a)`.
pub fn displacement_unitary(dim: usize, beta: Complex64) -> DMatrix<Complex64> {
    let a = annihilation(dim);
    let ad = a.adjoint();
    let g = ad * beta - a * beta.conj();
    exp_anti_hermitian(&g)
}

/// Truncated squeezer `S(ζ) = exp((ζ* a² − ζ a†²)/2)` with `ζ = s e^{2iψ}`,
/// which squeezes the quadrature `x cos ψ + p sin ψ` by `e^{−s}`.
pub fn squeeze_unitary(dim: usize, squeeze: f64, angle: f64) -> DMatrix<Complex64> {
    let zeta = Complex64::from_polar(squeeze, 2.0 * angle);
    let a = annihilation(dim);
    let a2 = &a * &a;
    let ad2 = a2.adjoint();
    let g = (a2 * zeta.conj() - ad2 * zeta).scale(0.5);
    exp_anti_hermitian(&g)
}

// diag(√p_k) for the geometric thermal distribution.
fn thermal_root(dim: usize, occupation: f64) -> DMatrix<Complex64> {
    let ratio = (occupation / (occupation + 1.0)).sqrt();
    let mut root = DMatrix::zeros(dim, dim);
    let mut amp = (1.0 / (occupation + 1.0)).sqrt();
    for k in 0..dim {
        root[(k, k)] = Complex64::new(amp, 0.0);
        amp *= ratio;
    }
    root
}

/// Density matrix of a single-mode Gaussian state in the number basis.
///
/// Fails with [`Error::CutoffTooSmall`] when the retained block misses more
/// than 1e-8 of the trace.
pub fn gaussian_to_fock(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    if cutoff < 2 {
        return Err(invalid("cutoff", "must be at least 2"));
    }
    let d = state.single_mode_decomposition()?;
    let work = 2 * cutoff + 40;
    let beta = Complex64::new(d.mean[0], d.mean[1]);
    let u = displacement_unitary(work, beta) * squeeze_unitary(work, d.squeeze, d.angle);
    let full = u * thermal_root(work, d.thermal);
    let factor = full.rows(0, cutoff).into_owned();
    let rho = FockOperator::from_factor(factor);
    let deficit = 1.0 - rho.trace();
    if deficit > MAX_TRACE_DEFICIT {
        return Err(Error::CutoffTooSmall { cutoff, deficit });
    }
    Ok(rho)
}

fn hermitian_sqrt(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = m.clone().symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.min();
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    let q = &eig.eigenvectors;
    let roots = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
    Ok(q * roots * q.adjoint())
}

/// Uhlmann fidelity `[Tr √(√σ₁ σ₂ √σ₁)]²`, evaluated as `‖B₁† B₂‖₁²` from the
/// factors `σᵢ = Bᵢ Bᵢ†`.
pub fn fock_fidelity(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    if a.cutoff != b.cutoff {
        return Err(Error::DimensionMismatch {
            expected: a.cutoff,
            actual: b.cutoff,
        });
    }
    let overlap = a.factor.adjoint() * &b.factor;
    let root_trace: f64 = overlap.svd(false, false).singular_values.iter().sum();
    Ok(root_trace * root_trace)
}

/// Fock-space fidelity of two single-mode Gaussian states, evaluated after a
/// common Gaussian unitary that takes their average covariance to a thermal
/// covariance and centres their means.
///
/// The fidelity is invariant under the common unitary; the frame change keeps
/// the photon-number support of squeezed pairs inside a modest cutoff.
pub fn gaussian_pair_fidelity(a: &GaussianState, b: &GaussianState, cutoff: usize) -> Result<f64> {
    if a.num_modes() != 1 || b.num_modes() != 1 {
        return Err(invalid("state", "Fock fidelity is single-mode only"));
    }
    let average = GaussianState::new((a.mean() + b.mean()) * 0.5, (a.cov() + b.cov()) * 0.5)?;
    let whiten = average.single_mode_decomposition()?.whitening_transform();
    let centre = whiten.matrix() * average.mean();
    let frame = whiten.then(&crate::gaussian::SymplecticTransform::displacement_only(-centre)?)?;
    let fa = gaussian_to_fock(&a.apply(&frame)?, cutoff)?;
    let fb = gaussian_to_fock(&b.apply(&frame)?, cutoff)?;
    fock_fidelity(&fa, &fb)
}
