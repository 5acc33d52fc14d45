//! Brute-force attractor spaces: null spaces of the stacked linear constraints
//! (U_K ⊗ conj(U_K) − λ) vec(X) = 0 over every configuration K.
//!
//! The empty configuration acts block-diagonally on site tuples, so its null
//! space is assembled from one small local null space. The remaining
//! constraints are restricted to that subspace, where the normal matrix is
//! small enough to diagonalize densely. Singular values of the near-null
//! directions are then recomputed from the constraints themselves.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::Schur;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{build_superoperator, check_particles};
use crate::error::{Error, Result};
use crate::hilbert::{hadamard, local_reflection, StepUnitary, Topology};
use crate::linalg::{kron, Operator, ZERO};
use crate::percolation::{enumerate_configs, PercolationModel};

use super::Eigenvalue;

pub const MAX_SITES_TWO_PARTICLES: usize = 4;
pub const MAX_SITES_ONE_PARTICLE: usize = 8;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_CUTOFF: f64 = 1e-9;
/// |1 − |μ|| below this counts as a unimodular superoperator eigenvalue.
pub const PERIPHERAL_WINDOW: f64 = 1e-8;
/// Dense superoperator spectra are computed for two-particle walks up to this size.
pub const DENSE_SPECTRUM_MAX_SITES: usize = 3;

/// Eigenvalues of the restricted normal matrix below this fraction of the
/// largest are re-examined against the full constraints.
const CANDIDATE_CUTOFF: f64 = 1e-6;
const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct OracleSector {
    pub eigenvalue: Eigenvalue,
    pub dimension: usize,
    /// Singular values counted as zero, ascending.
    pub null_singular_values: Vec<f64>,
    /// Smallest singular value above the cutoff, if any.
    pub gap_singular_value: Option<f64>,
    pub largest_singular_value: f64,
    /// Hilbert–Schmidt orthonormal basis of the null space.
    pub basis: Vec<Operator>,
}

#[derive(Debug, Clone)]
pub struct PeripheralSpectrum {
    /// Superoperator eigenvalues inside the unimodular window.
    pub unimodular: Vec<Complex64>,
    /// Unimodular eigenvalues farther than 1e-6 from every candidate.
    pub outside_candidates: Vec<Complex64>,
    pub spectral_radius: f64,
}

#[derive(Debug, Clone)]
pub struct AttractorSpace {
    pub topology: Topology,
    pub particles: usize,
    pub sectors: Vec<OracleSector>,
    pub peripheral: Option<PeripheralSpectrum>,
}

impl AttractorSpace {
    /// Dimensions in the order 1, i, −i, −1.
    pub fn dimensions(&self) -> [usize; 4] {
        Eigenvalue::ALL.map(|l| {
            self.sectors.iter().find(|s| s.eigenvalue == l).map_or(0, |s| s.dimension)
        })
    }

    pub fn total(&self) -> usize {
        self.dimensions().iter().sum()
    }
}

pub fn check_oracle_guard(topology: &Topology, particles: usize) -> Result<()> {
    check_particles(particles)?;
    let limit = if particles == 2 { MAX_SITES_TWO_PARTICLES } else { MAX_SITES_ONE_PARTICLE };
    if topology.n_sites() > limit {
        return Err(Error::Guard(format!(
            "{particles}-particle oracle supports at most {limit} sites, got {}",
            topology.n_sites()
        )));
    }
    Ok(())
}

/// Per-eigenvalue attractor dimensions and bases by direct linear algebra.
///
/// Two-particle walks with at most three sites also get the dense
/// superoperator spectrum.
pub fn brute_force_attractor_space(topology: &Topology, particles: usize) -> Result<AttractorSpace> {
    let dense = particles == 2 && topology.n_sites() <= DENSE_SPECTRUM_MAX_SITES;
    brute_force_attractor_space_with(topology, particles, dense)
}

pub fn brute_force_attractor_space_with(
    topology: &Topology,
    particles: usize,
    dense_spectrum: bool,
) -> Result<AttractorSpace> {
    check_oracle_guard(topology, particles)?;
    let problem = Problem::new(topology, particles)?;
    let sectors = Eigenvalue::ALL
        .par_iter()
        .map(|&l| problem.solve(l))
        .collect::<Vec<_>>();
    let peripheral = if dense_spectrum { Some(peripheral_spectrum(topology, particles)?) } else { None };
    Ok(AttractorSpace { topology: *topology, particles, sectors, peripheral })
}

/// Unimodular eigenvalues of the dense superoperator (uniform break probability 1/2).
pub fn peripheral_spectrum(topology: &Topology, particles: usize) -> Result<PeripheralSpectrum> {
    let model = PercolationModel::uniform(topology, 0.5)?;
    let m = build_superoperator(topology, &model, particles)?.matrix;
    // every U_K is real, so the superoperator is too and the real Schur form applies
    if m.iter().any(|z| z.im != 0.0) {
        return Err(Error::InvalidParameter("superoperator is not real".into()));
    }
    let eig = Schur::try_new(m.map(|z| z.re), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::InvalidParameter("Schur decomposition did not converge".into()))?
        .complex_eigenvalues();
    let spectral_radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let unimodular: Vec<Complex64> =
        eig.iter().copied().filter(|z| (1.0 - z.norm()).abs() < PERIPHERAL_WINDOW).collect();
    let outside_candidates =
        unimodular.iter().copied().filter(|z| Eigenvalue::nearest(*z).1 > 1e-6).collect();
    Ok(PeripheralSpectrum { unimodular, outside_candidates, spectral_radius })
}

/// Sparse column: (row-major vec index, value).
type SparseColumn = Vec<(u32, Complex64)>;

struct Problem {
    particles: usize,
    /// Single-particle dimension 2N.
    d: usize,
    /// Full dimension (2N)^p.
    dim: usize,
    /// Site tuples, each of length `particles`.
    site_tuples: Vec<Vec<usize>>,
    /// For every configuration, the sparse columns of U_K^{⊗p}.
    unitary_columns: Vec<Vec<Vec<(usize, f64)>>>,
    /// b^{⊗p} for the local empty-configuration block b = 𝓡H.
    local: Operator,
}

impl Problem {
    fn new(topology: &Topology, particles: usize) -> Result<Self> {
        let d = topology.dim();
        let dim = d.pow(particles as u32);
        let n = topology.n_sites();
        let site_tuples: Vec<Vec<usize>> = (0..n.pow(particles as u32))
            .map(|k| {
                let mut t = vec![0; particles];
                let mut rest = k;
                for slot in t.iter_mut().rev() {
                    *slot = rest % n;
                    rest /= n;
                }
                t
            })
            .collect();
        let mut unitary_columns = Vec::new();
        for k in enumerate_configs(topology)? {
            let u = StepUnitary::new(topology, &k)?.to_dense();
            let single: Vec<Vec<(usize, f64)>> = (0..d)
                .map(|c| (0..d).filter(|&r| u[(r, c)] != ZERO).map(|r| (r, u[(r, c)].re)).collect())
                .collect();
            let cols = if particles == 1 {
                single
            } else {
                (0..dim)
                    .map(|g| {
                        let (a, b) = (g / d, g % d);
                        let mut out = Vec::with_capacity(4);
                        for &(ra, va) in &single[a] {
                            for &(rb, vb) in &single[b] {
                                out.push((ra * d + rb, va * vb));
                            }
                        }
                        out
                    })
                    .collect()
            };
            unitary_columns.push(cols);
        }
        let rh = local_reflection() * hadamard();
        let local = if particles == 1 { rh } else { kron(&rh, &rh) };
        Ok(Problem { particles, d, dim, site_tuples, unitary_columns, local })
    }

    /// Global index of coin tuple `coins` (row-major bits) on site tuple `sites`.
    fn global_index(&self, sites: &[usize], coins: usize) -> usize {
        let mut g = 0;
        for (i, &s) in sites.iter().enumerate() {
            let bit = (coins >> (self.particles - 1 - i)) & 1;
            g = g * self.d + 2 * s + bit;
        }
        g
    }

    /// Orthonormal null vectors of (b⊗conj(b) − λ) on one block, as row-major block vectors.
    fn local_null_space(&self, lambda: Complex64) -> Vec<Vec<Complex64>> {
        let m = self.local.nrows();
        let l = kron(&self.local, &self.local.map(|z| z.conj())) - Operator::identity(m * m, m * m) * lambda;
        let eig = SymmetricEigen::new(l.adjoint() * &l);
        (0..m * m)
            .filter(|&i| eig.eigenvalues[i] < 1e-12)
            .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect()
    }

    /// Columns of the empty-configuration null-space basis.
    fn reduced_basis(&self, lambda: Complex64) -> Vec<SparseColumn> {
        let z = self.local_null_space(lambda);
        let m = self.local.nrows();
        let mut cols = Vec::with_capacity(self.site_tuples.len().pow(2) * z.len());
        for rs in &self.site_tuples {
            for cs in &self.site_tuples {
                for zv in &z {
                    let mut col = Vec::with_capacity(m * m);
                    for r in 0..m {
                        for c in 0..m {
                            let v = zv[r * m + c];
                            if v.norm() > 1e-15 {
                                let row = self.global_index(rs, r);
                                let colg = self.global_index(cs, c);
                                col.push(((row * self.dim + colg) as u32, v));
                            }
                        }
                    }
                    cols.push(col);
                }
            }
        }
        cols
    }

    /// Triplets (vec index, column, value) of (U_K X U_K† − λX) for each basis column X.
    fn constraint_triplets(
        &self,
        config: usize,
        lambda: Complex64,
        basis: &[SparseColumn],
    ) -> Vec<(u32, u32, Complex64)> {
        let ucols = &self.unitary_columns[config];
        let mut triplets = Vec::new();
        let mut scratch: Vec<(u32, Complex64)> = Vec::new();
        for (i, col) in basis.iter().enumerate() {
            scratch.clear();
            for &(idx, x) in col {
                let (rho, gamma) = (idx as usize / self.dim, idx as usize % self.dim);
                for &(r, vr) in &ucols[rho] {
                    for &(c, vc) in &ucols[gamma] {
                        scratch.push(((r * self.dim + c) as u32, x * (vr * vc)));
                    }
                }
                scratch.push((idx, -x * lambda));
            }
            scratch.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let key = scratch[k].0;
                let mut sum = ZERO;
                while k < scratch.len() && scratch[k].0 == key {
                    sum += scratch[k].1;
                    k += 1;
                }
                if sum.norm() > 1e-15 {
                    triplets.push((key, i as u32, sum));
                }
            }
        }
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        triplets
    }

    fn solve(&self, eigenvalue: Eigenvalue) -> OracleSector {
        let lambda = eigenvalue.value();
        let basis = self.reduced_basis(lambda);
        let n = basis.len();
        if n == 0 {
            return OracleSector {
                eigenvalue,
                dimension: 0,
                null_singular_values: Vec::new(),
                gap_singular_value: None,
                largest_singular_value: 0.0,
                basis: Vec::new(),
            };
        }
        let configs = self.unitary_columns.len();
        let mut gram = Operator::zeros(n, n);
        for k in 0..configs {
            let trip = self.constraint_triplets(k, lambda, &basis);
            for group in trip.chunk_by(|a, b| a.0 == b.0) {
                for (a, &(_, i, yi)) in group.iter().enumerate() {
                    let ci = yi.conj();
                    for &(_, j, yj) in &group[a..] {
                        gram[(i as usize, j as usize)] += ci * yj;
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                gram[(i, j)] = gram[(j, i)].conj();
            }
        }
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let max_eig = eig.eigenvalues[order[n - 1]].max(0.0);
        let sigma_max = max_eig.sqrt();
        let candidates: Vec<usize> =
            order.iter().copied().take_while(|&i| eig.eigenvalues[i] <= CANDIDATE_CUTOFF * max_eig).collect();

        // ‖A v‖² for the candidate directions, straight from the constraints.
        let mut norms = vec![0.0f64; candidates.len()];
        for k in 0..configs {
            let trip = self.constraint_triplets(k, lambda, &basis);
            for group in trip.chunk_by(|a, b| a.0 == b.0) {
                for (slot, &ci) in candidates.iter().enumerate() {
                    let v = eig.eigenvectors.column(ci);
                    let s: Complex64 = group.iter().map(|&(_, j, y)| y * v[j as usize]).sum();
                    norms[slot] += s.norm_sqr();
                }
            }
        }
        let mut recomputed: Vec<(f64, usize)> =
            norms.iter().zip(candidates.iter()).map(|(s2, &ci)| (s2.sqrt(), ci)).collect();
        recomputed.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cutoff = RANK_CUTOFF * sigma_max;
        let null: Vec<(f64, usize)> = recomputed.iter().copied().filter(|(s, _)| *s < cutoff).collect();
        let gap_singular_value = recomputed
            .iter()
            .map(|(s, _)| *s)
            .find(|s| *s >= cutoff)
            .or_else(|| order.get(candidates.len()).map(|&i| eig.eigenvalues[i].max(0.0).sqrt()));

        let basis_ops = null
            .iter()
            .map(|&(_, ci)| {
                let v = eig.eigenvectors.column(ci);
                let mut x = Operator::zeros(self.dim, self.dim);
                for (j, col) in basis.iter().enumerate() {
                    let coef = v[j];
                    if coef == ZERO {
                        continue;
                    }
                    for &(idx, val) in col {
                        let (r, c) = (idx as usize / self.dim, idx as usize % self.dim);
                        x[(r, c)] += coef * val;
                    }
                }
                x
            })
            .collect();
        OracleSector {
            eigenvalue,
            dimension: null.len(),
            null_singular_values: null.iter().map(|(s, _)| *s).collect(),
            gap_singular_value,
            largest_singular_value: sigma_max,
            basis: basis_ops,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractors::{attractor_residual, orthonormal_basis_1p};
    use crate::linalg::{hs_inner, ONE};

    /// Plain SVD of the full stacked constraint matrix.
    fn stacked_null_dims(topology: &Topology, particles: usize) -> [usize; 4] {
        let us: Vec<Operator> = enumerate_configs(topology)
            .unwrap()
            .iter()
            .map(|k| {
                let u = StepUnitary::new(topology, k).unwrap().to_dense();
                if particles == 2 {
                    kron(&u, &u)
                } else {
                    u
                }
            })
            .collect();
        let d = us[0].nrows();
        Eigenvalue::ALL.map(|l| {
            let mut stacked = Operator::zeros(us.len() * d * d, d * d);
            for (k, u) in us.iter().enumerate() {
                let block = kron(u, &u.map(|z| z.conj())) - Operator::identity(d * d, d * d) * l.value();
                stacked.view_mut((k * d * d, 0), (d * d, d * d)).copy_from(&block);
            }
            let sv = stacked.singular_values();
            let smax = sv.max();
            sv.iter().filter(|s| **s < RANK_CUTOFF * smax).count()
        })
    }

    #[test]
    fn agrees_with_plain_svd() {
        for (t, p) in [
            (Topology::line(2).unwrap(), 1),
            (Topology::line(4).unwrap(), 1),
            (Topology::circle(4).unwrap(), 1),
            (Topology::circle(3).unwrap(), 1),
            (Topology::line(2).unwrap(), 2),
            (Topology::circle(2).unwrap(), 2),
        ] {
            let space = brute_force_attractor_space_with(&t, p, false).unwrap();
            assert_eq!(space.dimensions(), stacked_null_dims(&t, p), "{t} p={p}");
        }
    }

    #[test]
    fn one_particle_line_has_five() {
        for n in 2..=5 {
            let t = Topology::line(n).unwrap();
            let space = brute_force_attractor_space(&t, 1).unwrap();
            assert_eq!(space.dimensions(), [3, 1, 1, 0]);
            assert_eq!(space.total(), orthonormal_basis_1p(&t).unwrap().len());
        }
    }

    #[test]
    fn oracle_basis_is_orthonormal_attractors() {
        let t = Topology::line(3).unwrap();
        let space = brute_force_attractor_space_with(&t, 1, false).unwrap();
        for s in &space.sectors {
            for (i, x) in s.basis.iter().enumerate() {
                assert!(attractor_residual(x, s.eigenvalue.value(), &t).unwrap() < 1e-10);
                for (j, y) in s.basis.iter().enumerate() {
                    let g = hs_inner(x, y);
                    let target = if i == j { ONE } else { ZERO };
                    assert!((g - target).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn guard() {
        let t = Topology::line(30).unwrap();
        assert!(matches!(brute_force_attractor_space(&t, 2), Err(Error::Guard(_))));
        assert!(matches!(brute_force_attractor_space(&Topology::line(9).unwrap(), 1), Err(Error::Guard(_))));
    }

    #[test]
    fn small_dense_spectrum() {
        let t = Topology::line(2).unwrap();
        let space = brute_force_attractor_space(&t, 2).unwrap();
        let per = space.peripheral.as_ref().unwrap();
        assert!(per.outside_candidates.is_empty());
        assert!(per.spectral_radius <= 1.0 + 1e-10);
        assert_eq!(per.unimodular.len(), space.total());
    }
}
