//! Dense complex matrix helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Operator = DMatrix<Complex64>;
pub type DensityMatrix = DMatrix<Complex64>;
pub type StateVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Hilbert–Schmidt inner product Tr(A†B).
pub fn hs_inner(a: &Operator, b: &Operator) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &Operator) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hs_distance(a: &Operator, b: &Operator) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Largest entry modulus.
pub fn max_abs(a: &Operator) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Operator, b: &Operator) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

pub fn kron_vec(a: &StateVector, b: &StateVector) -> StateVector {
    a.kronecker(b)
}

/// |u⟩⟨v|
pub fn outer(u: &StateVector, v: &StateVector) -> Operator {
    u * v.adjoint()
}

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &Operator) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Hermiticity, unit trace and positivity at the given tolerances.
pub fn check_density_matrix(rho: &Operator, tol: f64, psd_tol: f64) -> bool {
    if !rho.is_square() {
        return false;
    }
    if max_abs_diff(rho, &rho.adjoint()) > tol {
        return false;
    }
    if (rho.trace() - ONE).norm() > tol {
        return false;
    }
    hermitian_eigenvalues(rho)
        .first()
        .is_some_and(|&m| m >= -psd_tol)
}

pub fn is_unitary(u: &Operator, tol: f64) -> bool {
    u.is_square() && max_abs_diff(&(u.adjoint() * u), &identity(u.nrows())) <= tol
}

/// Row-major JSON form `{"dim": d, "rows": [[[re, im], ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub rows: Vec<Vec<[f64; 2]>>,
}

impl From<&Operator> for OperatorJson {
    fn from(m: &Operator) -> Self {
        let rows = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
            .collect();
        OperatorJson { dim: m.nrows(), rows }
    }
}

impl TryFrom<&OperatorJson> for Operator {
    type Error = Error;

    fn try_from(j: &OperatorJson) -> Result<Self> {
        if j.rows.len() != j.dim {
            return Err(Error::DimensionMismatch { expected: j.dim, got: j.rows.len() });
        }
        for row in &j.rows {
            if row.len() != j.dim {
                return Err(Error::DimensionMismatch { expected: j.dim, got: row.len() });
            }
        }
        Ok(Operator::from_fn(j.dim, j.dim, |r, c| {
            let [re, im] = j.rows[r][c];
            c64(re, im)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let m = Operator::from_fn(3, 3, |r, c| c64(0.1 * r as f64 + 1.0 / 3.0, -(c as f64) / 7.0));
        let text = serde_json::to_string(&OperatorJson::from(&m)).unwrap();
        let back: OperatorJson = serde_json::from_str(&text).unwrap();
        let m2 = Operator::try_from(&back).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn ragged_json_rejected() {
        let j = OperatorJson { dim: 2, rows: vec![vec![[1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]] };
        assert!(Operator::try_from(&j).is_err());
    }

    #[test]
    fn hs_geometry() {
        let a = identity(2);
        assert!((hs_inner(&a, &a) - c64(2.0, 0.0)).norm() < 1e-15);
        assert!((hs_norm(&a) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(hs_distance(&a, &a), 0.0);
    }
}
