//! Quantum geometric tensor, complex-pair metric components, Lorentzian
//! assembly and signature classification.
//!
//! For a family `Ψ(x)` with `N = ⟨Ψ|Ψ⟩` the tensor is
//!
//! ```text
//! Q_μν = ⟨∂_μΨ|∂_νΨ⟩/N − ⟨∂_μΨ|Ψ⟩⟨Ψ|∂_νΨ⟩/N²
//! ```
//!
//! (the second term only in the projective convention). `Re Q` is the
//! quantum metric and `F_μν = −2·Im Q_μν` the Berry curvature.
//!
//! Complex coordinates `Z = x_a + i·s·x_b` use the Wirtinger operators
//! `∂_Z = ½(∂_a − (i/s)·∂_b)`. With this normalization a family that is
//! holomorphic in `Z` has `Re Q = g·I` on `(x_a, x_b)` and the
//! Wirtinger component equals the same `g`, so `ds² = g·dZ·dZ̄`.
//! Dropping the ½ would scale every diagonal component by 4.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::charts::{ChartError, MetricTensor};
use crate::diff::DifferentiationScheme;
use crate::states::{inner_product, StateError, StateFamily, StateVector};

/// Eigenvalues within `zero_tol·max(1, max|λ|)` of zero count as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("state has zero norm at the requested point")]
    ZeroNorm,
    #[error("c must be positive and finite, got {0}")]
    BadSpeed(f64),
    #[error("coefficient {name} is not finite")]
    NonFinite { name: &'static str },
    #[error("expected a {expected}-dimensional metric, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("metric is not diagonal: off-diagonal magnitude {off:e} exceeds {limit:e}")]
    NotDiagonal { off: f64, limit: f64 },
    #[error("axes must be distinct and below {dim}, got ({a}, {b})")]
    BadPair { a: usize, b: usize, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Both terms; invariant under phase and scale changes of the state.
    #[default]
    Projective,
    /// Derivative overlap only.
    Raw,
}

/// Complex Hermitian `m × m` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTensor {
    pub q: DMatrix<Complex64>,
    pub convention: Convention,
}

impl HermitianTensor {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.q.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.q.map(|z| z.im)
    }

    /// `Re Q` as a metric tensor.
    pub fn metric(&self) -> Result<MetricTensor, MetricError> {
        Ok(MetricTensor::symmetrized(self.real_part())?)
    }

    /// Largest entry of `|Q − Q†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = &self.q - self.q.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm of the entries.
    pub fn max_abs(&self) -> f64 {
        self.q.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn overlaps(
    psi: &StateVector,
    norm: f64,
    dmu: &StateVector,
    dnu: &StateVector,
    convention: Convention,
) -> Result<Complex64, StateError> {
    let mut q = inner_product(dmu, dnu)? / norm;
    if convention == Convention::Projective {
        q -= inner_product(dmu, psi)? * inner_product(psi, dnu)? / (norm * norm);
    }
    Ok(q)
}

fn state_and_norm(family: &StateFamily, p: &[f64]) -> Result<(StateVector, f64), MetricError> {
    let psi = family.evaluate(p)?;
    let norm = psi.norm_sqr();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(MetricError::ZeroNorm);
    }
    Ok((psi, norm))
}

/// Quantum geometric tensor of `family` at `p` over its real parameters.
pub fn qgt(
    family: &StateFamily,
    p: &[f64],
    scheme: &DifferentiationScheme,
    convention: Convention,
) -> Result<HermitianTensor, MetricError> {
    let (psi, norm) = state_and_norm(family, p)?;
    let m = family.param_dim();
    let derivs = (0..m)
        .map(|axis| family.differentiate(p, axis, scheme))
        .collect::<Result<Vec<_>, _>>()?;
    let mut q = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
    for mu in 0..m {
        for nu in mu..m {
            let v = overlaps(&psi, norm, &derivs[mu], &derivs[nu], convention)?;
            q[(mu, nu)] = v;
            q[(nu, mu)] = v.conj();
        }
        // Diagonal overlaps are real up to rounding.
        q[(mu, mu)] = Complex64::new(q[(mu, mu)].re, 0.0);
    }
    Ok(HermitianTensor { q, convention })
}

/// Diagonal metric component for the complex coordinate `Z = x_a + i·c·x_b`:
/// the tensor of `∂_Z = ½(∂_a − (i/c)·∂_b)` with itself.
pub fn g_component_wirtinger(
    family: &StateFamily,
    p: &[f64],
    pair: (usize, usize),
    c: f64,
    scheme: &DifferentiationScheme,
    convention: Convention,
) -> Result<Complex64, MetricError> {
    let (a, b) = pair;
    let dim = family.param_dim();
    if a == b || a >= dim || b >= dim {
        return Err(MetricError::BadPair { a, b, dim });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(MetricError::BadSpeed(c));
    }
    let (psi, norm) = state_and_norm(family, p)?;
    let da = family.differentiate(p, a, scheme)?;
    let db = family.differentiate(p, b, scheme)?;
    let coeff = Complex64::new(0.0, -1.0 / c);
    let dz = StateVector(
        da.0.iter()
            .zip(&db.0)
            .map(|(x, y)| 0.5 * (x + coeff * y))
            .collect(),
    );
    Ok(overlaps(&psi, norm, &dz, &dz, convention)?)
}

/// `diag(g11, g11, g22, −c²·g22)` on `(x, y, z, t)`.
pub fn assemble_real_metric(g11: f64, g22: f64, c: f64) -> Result<MetricTensor, MetricError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(MetricError::BadSpeed(c));
    }
    if !g11.is_finite() {
        return Err(MetricError::NonFinite { name: "g11" });
    }
    if !g22.is_finite() {
        return Err(MetricError::NonFinite { name: "g22" });
    }
    Ok(MetricTensor::diagonal(&[g11, g11, g22, -c * c * g22])?)
}

/// Diagonal coefficients of a `(x, y, z, t)` metric, with `−c²` stripped from the `dt²` slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaReport {
    pub eta: [f64; 4],
    pub residual_xy: f64,
    pub residual_zt: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn eta_coefficients(g: &MetricTensor, c: f64, tol: f64) -> Result<EtaReport, MetricError> {
    if g.dim() != 4 {
        return Err(MetricError::Dimension {
            expected: 4,
            got: g.dim(),
        });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(MetricError::BadSpeed(c));
    }
    let m = g.components();
    let mut off: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                off = off.max(m[(a, b)].abs());
            }
        }
    }
    let limit = tol * m.amax();
    if off > limit {
        return Err(MetricError::NotDiagonal { off, limit });
    }
    let eta = [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)] / (-c * c)];
    let residual_xy = (eta[0] - eta[1]).abs();
    let residual_zt = (eta[2] - eta[3]).abs();
    let scale = 1f64.max(eta[0].abs()).max(eta[2].abs());
    Ok(EtaReport {
        eta,
        residual_xy,
        residual_zt,
        tolerance: tol,
        pass: residual_xy <= tol * scale && residual_zt <= tol * scale,
    })
}

/// Inertia `(n₊, n₋, n₀)` of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignatureTriple {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl SignatureTriple {
    pub fn new(n_plus: usize, n_minus: usize, n_zero: usize) -> Self {
        SignatureTriple {
            n_plus,
            n_minus,
            n_zero,
        }
    }
}

/// Counts eigenvalues above `zero_tol·s`, below `−zero_tol·s`, and the rest,
/// where `s = max(1, max|λ|)`.
pub fn signature(g: &MetricTensor, zero_tol: f64) -> SignatureTriple {
    let eig = SymmetricEigen::new(g.components().clone());
    let scale = eig.eigenvalues.amax().max(1.0);
    let cut = zero_tol * scale;
    let mut sig = SignatureTriple::new(0, 0, 0);
    for &l in eig.eigenvalues.iter() {
        if l > cut {
            sig.n_plus += 1;
        } else if l < -cut {
            sig.n_minus += 1;
        } else {
            sig.n_zero += 1;
        }
    }
    sig
}

/// [`signature`] for an unvalidated matrix; rejects asymmetric input.
pub fn signature_of(m: &DMatrix<f64>, zero_tol: f64) -> Result<SignatureTriple, MetricError> {
    Ok(signature(&MetricTensor::new(m.clone())?, zero_tol))
}
