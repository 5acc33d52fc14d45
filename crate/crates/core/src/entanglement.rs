//! Partial transpose, negativity and two-qubit concurrence.

use serde::{Deserialize, Serialize};

use crate::asymptotics::check_bq;
use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_eigenvalues, DensityMatrix, Operator, ZERO};

/// Minimum partial-transpose eigenvalue still counted as nonnegative.
pub const PPT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PTSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub is_ppt: bool,
    pub negativity: f64,
}

impl PTSpectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Transpose on the second factor of a d1·d2 dimensional operator.
pub fn partial_transpose(rho: &Operator, dims: (usize, usize)) -> Result<Operator> {
    let (d1, d2) = dims;
    let dim = d1 * d2;
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: rho.nrows() });
    }
    Ok(Operator::from_fn(dim, dim, |r, c| {
        let (i, k) = (r / d2, r % d2);
        let (j, l) = (c / d2, c % d2);
        rho[(i * d2 + l, j * d2 + k)]
    }))
}

pub fn pt_spectrum(rho: &DensityMatrix, dims: (usize, usize)) -> Result<PTSpectrum> {
    let pt = partial_transpose(rho, dims)?;
    let eigenvalues = hermitian_eigenvalues(&pt);
    let negativity = eigenvalues.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    let is_ppt = eigenvalues.first().is_none_or(|&m| m >= -PPT_TOL);
    Ok(PTSpectrum { eigenvalues, is_ppt, negativity })
}

pub fn negativity(rho: &DensityMatrix, dims: (usize, usize)) -> Result<f64> {
    Ok(pt_spectrum(rho, dims)?.negativity)
}

/// Eigenvalues of a two-qubit state below this are treated as rounding noise.
pub const CONCURRENCE_RANK_TOL: f64 = 1e-13;

/// Wootters concurrence of a two-qubit state.
///
/// The λ_i are the square roots of the eigenvalues of √ρ ρ̃ √ρ. They are taken
/// here as the singular values of Ψᵀ (σy⊗σy) Ψ with ρ = ΨΨ†, which avoids
/// square-rooting eigenvalues that vanish up to rounding.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.nrows() });
    }
    #[rustfmt::skip]
    let yy = Operator::from_row_slice(4, 4, &[
        ZERO, ZERO, ZERO, c64(-1.0, 0.0),
        ZERO, ZERO, c64(1.0, 0.0), ZERO,
        ZERO, c64(1.0, 0.0), ZERO, ZERO,
        c64(-1.0, 0.0), ZERO, ZERO, ZERO,
    ]);
    let eig = ((rho + rho.adjoint()).scale(0.5)).symmetric_eigen();
    let kept: Vec<usize> = (0..4).filter(|&k| eig.eigenvalues[k] > CONCURRENCE_RANK_TOL).collect();
    if kept.is_empty() {
        return Ok(0.0);
    }
    let psi = Operator::from_fn(4, kept.len(), |r, c| {
        let k = kept[c];
        eig.eigenvectors[(r, k)] * eig.eigenvalues[k].sqrt()
    });
    let tau = psi.transpose() * yy * &psi;
    let mut lambdas: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let rest: f64 = lambdas.iter().skip(1).sum();
    Ok((lambdas[0] - rest).max(0.0))
}

/// Closed-form concurrence of the asymptotic coin state of walkers starting
/// together on four sites.
pub fn concurrence_closed_form(b: f64, q: f64, phi: f64) -> Result<f64> {
    check_bq(b, q)?;
    let q2 = q * q;
    let q4 = q2 * q2;
    let sin2 = phi.sin().powi(2);
    let alpha = 25.0 - 34.0 * q2 + 13.0 * q4 - 72.0 * b * b * (1.0 - b * b - q2) * sin2;
    let beta = 7.0 + 2.0 * q2 - 5.0 * q4;
    let disc = (alpha * alpha - beta * beta).max(0.0).sqrt();
    let value = ((alpha + disc).max(0.0).sqrt() - (alpha - disc).max(0.0).sqrt() - 4.0 * (1.0 + q2)) / 12.0;
    Ok(value.max(0.0))
}

/// Whether the closed-form inequality classifies the asymptotic coin state as NPT.
pub fn npt_region(b: f64, q: f64, phi: f64) -> bool {
    let q2 = q * q;
    b * b * (1.0 - b * b - q2) * phi.sin().powi(2) < (5.0 - 26.0 * q2 + 5.0 * q2 * q2) / 36.0
}
