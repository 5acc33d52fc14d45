//! Asymptotic cycles: the general projection onto the attractor space and the
//! closed forms for circles without single-particle eigenstates and for N = 4.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::attractors::{phi_w, AttractorBasis};
use crate::error::{Error, Result};
use crate::hilbert::{two_particle_index, BasisIndex, Coin, Topology};
use crate::linalg::{c64, hs_inner, identity, outer, DensityMatrix, Operator, StateVector, ZERO};
use crate::attractors::swap_operator;

/// Gram deviation tolerated by [`project_asymptotic`].
pub const GRAM_TOL: f64 = 1e-10;

pub type PositionMatrix = DMatrix<f64>;

/// Two-coin state a|ψ+⟩ + b|ψ−⟩ + c|φ+⟩ + d|φ−⟩ with
/// ψ± = (|LR⟩ ± |RL⟩)/√2 and φ± = (|LL⟩ ± |RR⟩)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellCoinState {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl BellCoinState {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("Bell amplitudes have squared norm {norm}, expected 1")));
        }
        Ok(BellCoinState { a, b, c, d })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("Bell amplitudes are all zero".into()));
        }
        Ok(BellCoinState { a: a / norm, b: b / norm, c: c / norm, d: d / norm })
    }

    pub fn psi_plus() -> Self {
        BellCoinState { a: c64(1.0, 0.0), b: ZERO, c: ZERO, d: ZERO }
    }

    pub fn singlet() -> Self {
        BellCoinState { a: ZERO, b: c64(1.0, 0.0), c: ZERO, d: ZERO }
    }

    pub fn phi_plus() -> Self {
        BellCoinState { a: ZERO, b: ZERO, c: c64(1.0, 0.0), d: ZERO }
    }

    pub fn phi_minus() -> Self {
        BellCoinState { a: ZERO, b: ZERO, c: ZERO, d: c64(1.0, 0.0) }
    }

    /// Product state |LL⟩.
    pub fn ll() -> Self {
        let h = c64(FRAC_1_SQRT_2, 0.0);
        BellCoinState { a: ZERO, b: ZERO, c: h, d: h }
    }

    /// From amplitudes in the order (LL, LR, RL, RR).
    pub fn from_coin_amplitudes(v: [Complex64; 4]) -> Result<Self> {
        let s = FRAC_1_SQRT_2;
        Self::new((v[1] + v[2]) * s, (v[1] - v[2]) * s, (v[0] + v[3]) * s, (v[0] - v[3]) * s)
    }

    /// Amplitudes in the order (LL, LR, RL, RR).
    pub fn coin_amplitudes(&self) -> [Complex64; 4] {
        let s = FRAC_1_SQRT_2;
        [(self.c + self.d) * s, (self.a + self.b) * s, (self.a - self.b) * s, (self.c - self.d) * s]
    }

    /// Weight on span{ψ+, φ−}.
    pub fn q_squared(&self) -> f64 {
        self.a.norm_sqr() + self.d.norm_sqr()
    }

    /// Relative phase of c with respect to b (the phase of c when b = 0).
    pub fn phase(&self) -> f64 {
        if self.b == ZERO {
            self.c.arg()
        } else {
            self.c.arg() - self.b.arg()
        }
    }

    /// State with real b = `b` ≥ 0, c = e^{iφ}√(1 − b² − q²), a = q, d = 0.
    pub fn from_parameters(b: f64, q: f64, phi: f64) -> Result<Self> {
        check_bq(b, q)?;
        let cm = (1.0 - b * b - q * q).max(0.0).sqrt();
        Self::normalized(c64(q, 0.0), c64(b, 0.0), Complex64::from_polar(cm, phi), ZERO)
    }
}

pub(crate) fn check_bq(b: f64, q: f64) -> Result<()> {
    if b.is_nan() || b < 0.0 || !q.is_finite() || b * b + q * q > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("need b >= 0 and b^2 + q^2 <= 1, got b={b}, q={q}")));
    }
    Ok(())
}

/// |x, y⟩ ⊗ χ for the coin state χ.
pub fn initial_state(topology: &Topology, x: usize, y: usize, coin: &BellCoinState) -> Result<StateVector> {
    let n = topology.n_sites();
    if x >= n || y >= n {
        return Err(Error::InvalidParameter(format!("sites ({x}, {y}) outside 0..{n}")));
    }
    let amps = coin.coin_amplitudes();
    let mut v = StateVector::zeros(topology.dim_for(2));
    for (k, amp) in amps.iter().enumerate() {
        let i = BasisIndex::new(x, Coin::from_index(k / 2));
        let j = BasisIndex::new(y, Coin::from_index(k % 2));
        v[two_particle_index(topology, i, j)] = *amp;
    }
    Ok(v)
}

pub fn initial_density(topology: &Topology, x: usize, y: usize, coin: &BellCoinState) -> Result<DensityMatrix> {
    let v = initial_state(topology, x, y, coin)?;
    Ok(outer(&v, &v))
}

/// ρ∞(n) = Σ λ^n Tr(X† ρ0) X over an orthonormal attractor basis.
pub fn project_asymptotic(rho0: &DensityMatrix, basis: &AttractorBasis, n: u64) -> Result<DensityMatrix> {
    let dim = basis.dim();
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: rho0.nrows() });
    }
    let dev = basis.gram_deviation();
    if dev > GRAM_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    let mut out = Operator::zeros(dim, dim);
    for x in basis.elements() {
        let coef = hs_inner(&x.operator, rho0) * x.eigenvalue.pow(n);
        if coef != ZERO {
            out += &x.operator * coef;
        }
    }
    Ok(out)
}

/// States along a cycle of period dividing 4.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCycle<T> {
    pub period: usize,
    pub states: Vec<T>,
}

impl<T> AsymptoticCycle<T> {
    pub fn phase(&self, k: usize) -> &T {
        &self.states[k % self.period]
    }

    /// Builds a cycle from four consecutive phases, keeping the shortest period
    /// (1, 2 or 4) consistent with `close(a, b)`.
    pub fn from_four(states: Vec<T>, close: impl Fn(&T, &T) -> bool) -> Self {
        assert_eq!(states.len(), 4);
        let period = [1usize, 2]
            .into_iter()
            .find(|&p| (0..4).all(|k| close(&states[k], &states[(k + p) % 4])))
            .unwrap_or(4);
        let states = states.into_iter().take(period).collect();
        AsymptoticCycle { period, states }
    }

    /// Four phases regardless of period.
    pub fn four_phases(&self) -> Vec<&T> {
        (0..4).map(|k| self.phase(k)).collect()
    }
}

/// The four projected phases ρ∞(0..4) with their minimal period.
pub fn asymptotic_cycle(rho0: &DensityMatrix, basis: &AttractorBasis) -> Result<AsymptoticCycle<DensityMatrix>> {
    let states = (0..4).map(|n| project_asymptotic(rho0, basis, n)).collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticCycle::from_four(states, |a, b| crate::linalg::max_abs_diff(a, b) < 1e-12))
}

/// F = Σ |x,i,x,i⟩⟨y,j,y,j| = 2N |Φ_w⟩⟨Φ_w|.
pub fn same_site_operator(topology: &Topology) -> Operator {
    let w = phi_w(topology);
    outer(&w, &w).scale(topology.dim() as f64)
}

fn check_circle_size(n_sites: usize) -> Result<Topology> {
    if n_sites.is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!(
            "N = {n_sites} is a multiple of 4; use the general projection"
        )));
    }
    Topology::circle(n_sites)
}

fn steady_denominator(n: f64) -> f64 {
    2.0 * n * (2.0 * n * n + n - 1.0)
}

/// (c1, c2, c3) of the same-site steady state c1 I + c2 W + c3 F.
pub fn circle_steady_coefficients(n_sites: usize, coin: &BellCoinState) -> (f64, f64, f64) {
    let n = n_sites as f64;
    let (b2, c2) = (coin.b.norm_sqr(), coin.c.norm_sqr());
    let den = steady_denominator(n);
    (
        (n + b2 - c2) / den,
        (n - c2 - (2.0 * n + 1.0) * b2) / den,
        ((2.0 * n + 1.0) * c2 + b2 - 1.0) / den,
    )
}

/// (c1, c2, c3) of the distinct-site steady state ((2N+1) I − W − F)/(4N(2N²+N−1)).
pub fn circle_distinct_site_coefficients(n_sites: usize) -> (f64, f64, f64) {
    let n = n_sites as f64;
    let den = 2.0 * steady_denominator(n);
    ((2.0 * n + 1.0) / den, -1.0 / den, -1.0 / den)
}

/// Steady state on a circle whose length is not a multiple of 4, for walkers
/// starting on the same site or on distinct sites.
pub fn circle_steady_state(n_sites: usize, coin: &BellCoinState, same_site: bool) -> Result<DensityMatrix> {
    let t = check_circle_size(n_sites)?;
    let (c1, c2, c3) = if same_site {
        circle_steady_coefficients(n_sites, coin)
    } else {
        circle_distinct_site_coefficients(n_sites)
    };
    let d = t.dim_for(2);
    Ok(identity(d).scale(c1) + swap_operator(&t).scale(c2) + same_site_operator(&t).scale(c3))
}

/// Reduced coin state of the same-site steady state in its reference closed form,
/// with the LL/RR diagonal r1 = (2N² + N − 1) + N(|c|² − |b|²).
///
/// This r1 does not give unit trace; see [`circle_reduced_coin_state_corrected`].
pub fn circle_reduced_coin_state(n_sites: usize, coin: &BellCoinState) -> Result<Operator> {
    let n = n_sites as f64;
    reduced_coin_matrix(n_sites, coin, 2.0 * n * n + n - 1.0)
}

/// Partial trace of c1 I + c2 W + c3 F, which has r1 = (N² + N − 1) + N(|c|² − |b|²).
pub fn circle_reduced_coin_state_corrected(n_sites: usize, coin: &BellCoinState) -> Result<Operator> {
    let n = n_sites as f64;
    reduced_coin_matrix(n_sites, coin, n * n + n - 1.0)
}

fn reduced_coin_matrix(n_sites: usize, coin: &BellCoinState, r1_const: f64) -> Result<Operator> {
    check_circle_size(n_sites)?;
    let n = n_sites as f64;
    let (b2, c2) = (coin.b.norm_sqr(), coin.c.norm_sqr());
    let r1 = r1_const + n * (c2 - b2);
    let r2 = (2.0 * n + 1.0) * c2 + b2 - 1.0;
    let r3 = n * (n + b2 - c2);
    let r4 = n - (2.0 * n + 1.0) * b2 - c2;
    let scale = 1.0 / (2.0 * (2.0 * n * n + n - 1.0));
    #[rustfmt::skip]
    let m = [
        r1, 0.0, 0.0, r2,
        0.0, r3, r4, 0.0,
        0.0, r4, r3, 0.0,
        r2, 0.0, 0.0, r1,
    ];
    Ok(Operator::from_row_slice(4, 4, &m.map(|x| c64(x * scale, 0.0))))
}

/// Closed-form (off-diagonal, diagonal) position probabilities of the same-site steady state.
pub fn circle_position_formula(n_sites: usize, coin: &BellCoinState) -> (f64, f64) {
    let n = n_sites as f64;
    let (b2, c2) = (coin.b.norm_sqr(), coin.c.norm_sqr());
    let den = n * (2.0 * n * n + n - 1.0);
    ((2.0 * n + 2.0 * b2 - 2.0 * c2) / den, (3.0 * n - 1.0 + 2.0 * (n - 1.0) * (c2 - b2)) / den)
}

fn sites_from_dim(dim: usize) -> Result<usize> {
    let d = (dim as f64).sqrt().round() as usize;
    if d * d != dim || !d.is_multiple_of(2) || d < 4 {
        return Err(Error::DimensionMismatch { expected: 16, got: dim });
    }
    Ok(d / 2)
}

/// w(x, y) = Σ_ij ⟨x,i,y,j|ρ|x,i,y,j⟩.
pub fn position_distribution(rho: &DensityMatrix) -> Result<PositionMatrix> {
    let n = sites_from_dim(rho.nrows())?;
    let d = 2 * n;
    let mut w = PositionMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let k = (2 * x + i) * d + 2 * y + j;
                    s += rho[(k, k)].re;
                }
            }
            w[(x, y)] = s;
        }
    }
    Ok(w)
}

/// Partial trace over both positions, coin order (LL, LR, RL, RR).
pub fn reduced_coin_state(rho: &DensityMatrix) -> Result<Operator> {
    let n = sites_from_dim(rho.nrows())?;
    let d = 2 * n;
    let mut out = Operator::zeros(4, 4);
    for x in 0..n {
        for y in 0..n {
            for r in 0..4 {
                let row = (2 * x + r / 2) * d + 2 * y + r % 2;
                for c in 0..4 {
                    let col = (2 * x + c / 2) * d + 2 * y + c % 2;
                    out[(r, c)] += rho[(row, col)];
                }
            }
        }
    }
    Ok(out)
}

fn m4(scale: f64, e: [Complex64; 16]) -> Operator {
    Operator::from_row_slice(4, 4, &e.map(|z| z * scale))
}

/// Closed-form reduced coin cycle for walkers starting together on a line or circle of length 4.
pub fn line4_coin_cycle(coin: &BellCoinState) -> AsymptoticCycle<Operator> {
    let (b, c) = (coin.b, coin.c);
    let (b2, c2) = (b.norm_sqr(), c.norm_sqr());
    let r = |x: f64| c64(x, 0.0);
    let z1 = r(1.0 - 0.5 * (b2 - c2));
    let z2 = r((2.0 - b2 - 7.0 * c2) / 6.0);
    let z3 = r(1.0 + 0.5 * (b2 - c2));
    let z4 = r((2.0 - 7.0 * b2 - c2) / 6.0);
    let f = (b - c) * (b.conj() + c.conj());
    let g = b * c.conj() + b.conj() * c;
    let u1 = r(2.0 / 3.0 - 4.0 / 3.0 * (b2 + c2)) + g;
    let u2 = r(2.0 / 3.0 - 4.0 / 3.0 * (b2 + c2)) - g;
    let bc = b.conj() * c;
    let cb = b * c.conj();
    let two = r(2.0);
    let fb = f.conj();
    #[rustfmt::skip]
    let states = vec![
        m4(0.25, [
            z1, bc, -bc, -z2,
            cb, z3, z4, cb,
            -cb, z4, z3, -cb,
            -z2, bc, -bc, z1,
        ]),
        m4(0.125, [
            two - g, -f, f, -u1,
            -fb, two + g, u2, -fb,
            fb, u2, two + g, fb,
            -u1, -f, f, two - g,
        ]),
        m4(0.25, [
            z3, -cb, cb, -z4,
            -bc, z1, z2, -bc,
            bc, z2, z1, bc,
            -z4, -cb, cb, z3,
        ]),
        m4(0.125, [
            two + g, fb, -fb, -u2,
            f, two - g, u1, f,
            -f, u1, two - g, -f,
            -u2, fb, -fb, two + g,
        ]),
    ];
    AsymptoticCycle::from_four(states, |a, b| crate::linalg::max_abs_diff(a, b) < 1e-15)
}

/// The same cycle written with real b ≥ 0, q² = |a|² + |d|² and c = e^{iφ}√(1 − b² − q²).
pub fn line4_coin_cycle_parametrized(b: f64, q: f64, phi: f64) -> Result<AsymptoticCycle<Operator>> {
    check_bq(b, q)?;
    let q2 = q * q;
    let b2 = b * b;
    let rr = Complex64::from_polar(b * (1.0 - b2 - q2).max(0.0).sqrt(), phi);
    let rb = rr.conj();
    let re2 = rr + rb;
    let s = c64(1.0 - 2.0 * b2 - q2, 0.0) + (rr - rb);
    let sb = s.conj();
    let v1 = c64((2.0 - 4.0 * q2) / 3.0, 0.0) - re2;
    let v2 = c64((2.0 - 4.0 * q2) / 3.0, 0.0) + re2;
    let r = |x: f64| c64(x, 0.0);
    let p1 = r((3.0 - q2) / 2.0 - b2);
    let p2 = r((5.0 - 7.0 * q2) / 6.0 - b2);
    let p3 = r((1.0 + q2) / 2.0 + b2);
    let p4 = r((1.0 + q2) / 6.0 - b2);
    let two = r(2.0);
    #[rustfmt::skip]
    let states = vec![
        m4(0.25, [
            p1, rr, -rr, p2,
            rb, p3, p4, rb,
            -rb, p4, p3, -rb,
            p2, rr, -rr, p1,
        ]),
        m4(0.125, [
            two - re2, s, -s, v1,
            sb, two + re2, -v2, sb,
            -sb, -v2, two + re2, -sb,
            v1, s, -s, two - re2,
        ]),
        m4(0.25, [
            p3, -rb, rb, -p4,
            -rr, p1, -p2, -rr,
            rr, -p2, p1, rr,
            -p4, -rb, rb, p3,
        ]),
        m4(0.125, [
            two + re2, -sb, sb, v2,
            -s, two - re2, -v1, -s,
            s, -v1, two - re2, s,
            v2, -sb, sb, two + re2,
        ]),
    ];
    Ok(AsymptoticCycle::from_four(states, |a, b| crate::linalg::max_abs_diff(a, b) < 1e-15))
}

/// Closed-form position cycle (entries over 3840) for walkers starting together at the first site.
pub fn line4_position_cycle(coin: &BellCoinState) -> AsymptoticCycle<PositionMatrix> {
    let (b, c, d) = (coin.b, coin.c, coin.d);
    let (b2, c2, d2) = (b.norm_sqr(), c.norm_sqr(), d.norm_sqr());
    let cd = (c.conj() * d + c * d.conj()).re;
    let bc = (b * c.conj() + b.conj() * c).re;
    let bd = (b * d.conj() + b.conj() * d).re;
    let x1 = 294.0 + 3.0 * b2 + 49.0 * c2 + 24.0 * d2 + 52.0 * cd;
    let x2 = 306.0 - 3.0 * b2 - 49.0 * c2 - 24.0 * d2 - 52.0 * cd;
    let x3 = 3.0 * (58.0 + b2 + 3.0 * c2 + 8.0 * d2 + 4.0 * cd);
    let x4 = 3.0 * (62.0 - b2 - 3.0 * c2 - 8.0 * d2 - 4.0 * cd);
    let y1 = 234.0 + 3.0 * b2 + 29.0 * c2 + 24.0 * d2 - 10.0 * bc - 20.0 * bd + 32.0 * cd;
    let y2 = 246.0 - 3.0 * b2 - 29.0 * c2 - 24.0 * d2 + 10.0 * bc + 20.0 * bd - 32.0 * cd;
    let y3 = 234.0 + 3.0 * b2 + 29.0 * c2 + 24.0 * d2 + 10.0 * bc + 20.0 * bd + 32.0 * cd;
    let y4 = 246.0 - 3.0 * b2 - 29.0 * c2 - 24.0 * d2 - 10.0 * bc - 20.0 * bd - 32.0 * cd;
    let even = |v: [f64; 4]| {
        #[rustfmt::skip]
        let m = [
            v[0], v[1], v[2], v[3],
            v[2], v[3], v[0], v[1],
            v[1], v[0], v[3], v[2],
            v[3], v[2], v[1], v[0],
        ];
        PositionMatrix::from_row_slice(4, 4, &m.map(|x| x / 3840.0))
    };
    let shifted = |v: [f64; 4]| {
        #[rustfmt::skip]
        let m = [
            v[2], v[3], v[0], v[1],
            v[0], v[1], v[2], v[3],
            v[3], v[2], v[1], v[0],
            v[1], v[0], v[3], v[2],
        ];
        PositionMatrix::from_row_slice(4, 4, &m.map(|x| x / 3840.0))
    };
    let states = vec![even([x1, x2, x3, x4]), even([y1, y2, y3, y4]), shifted([x1, x2, x3, x4]), shifted([y1, y2, y3, y4])];
    AsymptoticCycle::from_four(states, |a, b| (a - b).amax() < 1e-15)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractors::orthonormal_basis;
    use crate::channel::PercolationChannel;
    use crate::linalg::{check_density_matrix, hs_distance, max_abs_diff, ONE};
    use crate::percolation::PercolationModel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coin(rng: &mut ChaCha8Rng) -> BellCoinState {
        let mut z = || c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        BellCoinState::normalized(z(), z(), z(), z()).unwrap()
    }

    /// Brute-force partial trace oracle straight from the index definition.
    fn trace_positions(rho: &Operator, n: usize) -> Operator {
        let d = 2 * n;
        Operator::from_fn(4, 4, |r, c| {
            let mut s = ZERO;
            for x in 0..n {
                for y in 0..n {
                    s += rho[((2 * x + r / 2) * d + 2 * y + r % 2, (2 * x + c / 2) * d + 2 * y + c % 2)];
                }
            }
            s
        })
    }

    #[test]
    fn bell_normalization_enforced() {
        assert!(BellCoinState::new(ONE, ONE, ZERO, ZERO).is_err());
        assert!(BellCoinState::normalized(ZERO, ZERO, ZERO, ZERO).is_err());
        let ll = BellCoinState::ll();
        let amps = ll.coin_amplitudes();
        assert!((amps[0] - ONE).norm() < 1e-15);
        assert!(amps[1].norm() + amps[2].norm() + amps[3].norm() < 1e-15);
        let back = BellCoinState::from_coin_amplitudes(amps).unwrap();
        assert!((back.c - ll.c).norm() < 1e-15 && (back.d - ll.d).norm() < 1e-15);
    }

    #[test]
    fn maximally_mixed_projects_to_itself() {
        let t = Topology::line(3).unwrap();
        let basis = orthonormal_basis(&t).unwrap();
        let mixed = identity(36).unscale(36.0);
        for n in 0..4 {
            assert!(max_abs_diff(&project_asymptotic(&mixed, &basis, n).unwrap(), &mixed) < 1e-14);
        }
    }

    #[test]
    fn projection_period_and_validity() {
        let t = Topology::line(4).unwrap();
        let basis = orthonormal_basis(&t).unwrap();
        let rho = initial_density(&t, 0, 0, &BellCoinState::singlet()).unwrap();
        for n in 0..4 {
            let a = project_asymptotic(&rho, &basis, n).unwrap();
            let b = project_asymptotic(&rho, &basis, n + 4).unwrap();
            assert!(max_abs_diff(&a, &b) < 1e-12);
            assert!(check_density_matrix(&a, 1e-12, 1e-10));
        }
    }

    #[test]
    fn projection_rejects_bad_basis() {
        use crate::attractors::{Attractor, Eigenvalue, Provenance};
        let t = Topology::line(2).unwrap();
        let basis = orthonormal_basis(&t).unwrap();
        assert!(project_asymptotic(&identity(4), &basis, 0).is_err());
        let bad = AttractorBasis::from_orthonormal(
            vec![Attractor { operator: identity(16).scale(0.25), eigenvalue: Eigenvalue::One, provenance: Provenance::Oracle }],
            1e-10,
        )
        .unwrap();
        let mut elements = bad.elements().to_vec();
        elements.push(elements[0].clone());
        // two copies of the same element are not orthonormal
        assert!(AttractorBasis::from_orthonormal(elements, 1e-10).is_err());
    }

    #[test]
    fn cycle_is_mapped_forward_by_channel() {
        let t = Topology::line(4).unwrap();
        let basis = orthonormal_basis(&t).unwrap();
        let ch = PercolationChannel::new(&t, &PercolationModel::uniform(&t, 0.4).unwrap(), 2).unwrap();
        let rho = initial_density(&t, 1, 2, &BellCoinState::ll()).unwrap();
        let cycle = asymptotic_cycle(&rho, &basis).unwrap();
        for k in 0..4 {
            let next = ch.apply(cycle.phase(k)).unwrap();
            assert!(hs_distance(&next, cycle.phase(k + 1)) < 1e-8);
        }
    }

    #[test]
    fn steady_state_examples() {
        let zero_bc = BellCoinState::psi_plus();
        let (c1, c2, c3) = circle_steady_coefficients(5, &zero_bc);
        assert!((c1 - 5.0 / 540.0).abs() < 1e-16);
        assert!((c2 - 5.0 / 540.0).abs() < 1e-16);
        assert!((c3 + 1.0 / 540.0).abs() < 1e-16);
        assert!(circle_steady_state(8, &zero_bc, true).is_err());
    }

    #[test]
    fn steady_state_marginals_and_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [3usize, 5, 7] {
            for _ in 0..5 {
                let coin = random_coin(&mut rng);
                let rho = circle_steady_state(n, &coin, true).unwrap();
                assert!(check_density_matrix(&rho, 1e-12, 1e-10));
                let w = position_distribution(&rho).unwrap();
                let (off, diag) = circle_position_formula(n, &coin);
                for x in 0..n {
                    assert!((w.row(x).sum() - 1.0 / n as f64).abs() < 1e-12);
                    assert!((w.column(x).sum() - 1.0 / n as f64).abs() < 1e-12);
                    for y in 0..n {
                        let expect = if x == y { diag } else { off };
                        assert!((w[(x, y)] - expect).abs() < 1e-12);
                    }
                }
                let rc = reduced_coin_state(&rho).unwrap();
                assert!(max_abs_diff(&rc, &circle_reduced_coin_state_corrected(n, &coin).unwrap()) < 1e-12);
                // the reference LL/RR diagonal is off by N² over 2(2N² + N − 1)
                let reference = circle_reduced_coin_state(n, &coin).unwrap();
                let gap = (n * n) as f64 / (2.0 * (2 * n * n + n - 1) as f64);
                assert!(((reference[(0, 0)] - rc[(0, 0)]).re - gap).abs() < 1e-12);
                assert!(((reference[(3, 3)] - rc[(3, 3)]).re - gap).abs() < 1e-12);
                assert!(max_abs_diff(&rc, &trace_positions(&rho, n)) < 1e-15);
            }
        }
    }

    #[test]
    fn uniform_distribution_condition() {
        // 2(|b|² − |c|²) = 1 − 1/N with N = 5, c = 0
        let b = 0.4f64.sqrt();
        let coin = BellCoinState::new(c64((1.0 - 0.4f64).sqrt(), 0.0), c64(b, 0.0), ZERO, ZERO).unwrap();
        let w = position_distribution(&circle_steady_state(5, &coin, true).unwrap()).unwrap();
        assert!(w.iter().all(|x| (x - 1.0 / 25.0).abs() < 1e-12));
    }

    #[test]
    fn reduced_coin_of_product() {
        let t = Topology::line(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let coin = random_coin(&mut rng);
        let rho = initial_density(&t, 0, 0, &coin).unwrap();
        let amps = StateVector::from_column_slice(&coin.coin_amplitudes());
        assert!(max_abs_diff(&reduced_coin_state(&rho).unwrap(), &outer(&amps, &amps)) < 1e-15);
        assert!(position_distribution(&identity(7)).is_err());
    }

    #[test]
    fn mixed_state_positions_uniform() {
        let w = position_distribution(&identity(64).unscale(64.0)).unwrap();
        assert!(w.iter().all(|x| (x - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn coin_cycle_special_cases() {
        let stat = line4_coin_cycle(&BellCoinState::psi_plus());
        assert_eq!(stat.period, 1);
        let third = 1.0 / 3.0;
        #[rustfmt::skip]
        let expected = [1.0, 0.0, 0.0, -third, 0.0, 1.0, third, 0.0, 0.0, third, 1.0, 0.0, -third, 0.0, 0.0, 1.0];
        let expected = Operator::from_row_slice(4, 4, &expected.map(|x| c64(x / 4.0, 0.0)));
        assert!(max_abs_diff(stat.phase(0), &expected) < 1e-15);

        let singlet = line4_coin_cycle(&BellCoinState::singlet());
        let phi = line4_coin_cycle(&BellCoinState::phi_plus());
        assert_eq!(singlet.period, 4);
        for k in 0..4 {
            assert!(max_abs_diff(singlet.phase(k), phi.phase(k + 2)) < 1e-15);
        }
        #[rustfmt::skip]
        let first = [1.0, 0.0, 0.0, -third, 0.0, 3.0, -5.0 * third, 0.0, 0.0, -5.0 * third, 3.0, 0.0, -third, 0.0, 0.0, 1.0];
        let first = Operator::from_row_slice(4, 4, &first.map(|x| c64(x / 8.0, 0.0)));
        assert!(max_abs_diff(singlet.phase(0), &first) < 1e-15);
        #[rustfmt::skip]
        let second = [1.0, -0.5, 0.5, third, -0.5, 1.0, -third, -0.5, 0.5, -third, 1.0, 0.5, third, -0.5, 0.5, 1.0];
        let second = Operator::from_row_slice(4, 4, &second.map(|x| c64(x / 4.0, 0.0)));
        assert!(max_abs_diff(singlet.phase(1), &second) < 1e-15);
    }

    #[test]
    fn position_cycle_ll_has_equal_odd_phases() {
        let cycle = line4_position_cycle(&BellCoinState::ll());
        let four = cycle.four_phases();
        assert!((four[1] - four[3]).amax() < 1e-15);
        for m in four {
            assert!((m.sum() - 1.0).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn coin_cycle_forms_agree(b in 0.0f64..1.0, qfrac in 0.0f64..1.0, phi in -3.2f64..3.2, a_phase in -3.2f64..3.2) {
            let q = qfrac * (1.0 - b * b).sqrt();
            let coin = BellCoinState::from_parameters(b, q, phi).unwrap();
            // move part of q onto d without changing q²
            let a = Complex64::from_polar(q * 0.6, a_phase);
            let d = Complex64::from_polar(q * 0.8, -a_phase);
            let coin2 = BellCoinState::new(a, coin.b, coin.c, d).unwrap();
            let general = line4_coin_cycle(&coin);
            let general2 = line4_coin_cycle(&coin2);
            let param = line4_coin_cycle_parametrized(b, q, phi).unwrap();
            for k in 0..4 {
                prop_assert!(max_abs_diff(general.phase(k), param.phase(k)) < 1e-12);
                prop_assert!(max_abs_diff(general.phase(k), general2.phase(k)) < 1e-15);
                prop_assert!((general.phase(k).trace() - ONE).norm() < 1e-12);
            }
        }

        #[test]
        fn position_cycle_normalized(re in proptest::array::uniform8(-1.0f64..1.0)) {
            let z = |i: usize| c64(re[2 * i], re[2 * i + 1]);
            prop_assume!(re.iter().any(|x| x.abs() > 1e-3));
            let coin = BellCoinState::normalized(z(0), z(1), z(2), z(3)).unwrap();
            for m in line4_position_cycle(&coin).four_phases() {
                prop_assert!((m.sum() - 1.0).abs() < 1e-12);
            }
        }
    }
}
