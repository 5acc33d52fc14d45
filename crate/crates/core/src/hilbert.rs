//! Basis indexing, topologies and the per-configuration walk operators.
//!
//! Single-particle basis index is `2 * site + coin` with `L = 0`, `R = 1`.
//! Two-particle index is `2N * idx1 + idx2`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, identity, kron, Operator, ONE, ZERO};
use crate::percolation::EdgeConfig;

/// Largest supported number of sites; edge configurations are 64-bit masks.
pub const MAX_SITES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Line,
    Circle,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Line => write!(f, "line"),
            TopologyKind::Circle => write!(f, "circle"),
        }
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(TopologyKind::Line),
            "circle" => Ok(TopologyKind::Circle),
            other => Err(Error::InvalidTopology(format!("unknown kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Topology {
    kind: TopologyKind,
    n_sites: usize,
}

impl Topology {
    pub fn new(kind: TopologyKind, n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidTopology(format!("need at least 2 sites, got {n_sites}")));
        }
        if n_sites > MAX_SITES {
            return Err(Error::InvalidTopology(format!(
                "at most {MAX_SITES} sites supported, got {n_sites}"
            )));
        }
        Ok(Topology { kind, n_sites })
    }

    pub fn line(n_sites: usize) -> Result<Self> {
        Self::new(TopologyKind::Line, n_sites)
    }

    pub fn circle(n_sites: usize) -> Result<Self> {
        Self::new(TopologyKind::Circle, n_sites)
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn is_circle(&self) -> bool {
        self.kind == TopologyKind::Circle
    }

    pub fn num_edges(&self) -> usize {
        match self.kind {
            TopologyKind::Line => self.n_sites - 1,
            TopologyKind::Circle => self.n_sites,
        }
    }

    /// Edge `i` joins sites `(i, i + 1)`; the circle's last edge is `(N - 1, 0)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_edges()).map(|i| (i, (i + 1) % self.n_sites)).collect()
    }

    /// Edge from `site` to its right neighbour, if any.
    pub fn right_edge(&self, site: usize) -> Option<usize> {
        match self.kind {
            TopologyKind::Line if site + 1 >= self.n_sites => None,
            _ => Some(site),
        }
    }

    /// Edge from the left neighbour to `site`, if any.
    pub fn left_edge(&self, site: usize) -> Option<usize> {
        match self.kind {
            TopologyKind::Line if site == 0 => None,
            _ => Some((site + self.n_sites - 1) % self.n_sites),
        }
    }

    /// Single-particle dimension 2N.
    pub fn dim(&self) -> usize {
        2 * self.n_sites
    }

    pub fn dim_for(&self, particles: usize) -> usize {
        self.dim().pow(particles as u32)
    }

    /// Same graph with the circle's wrap edge cut.
    pub fn as_line(&self) -> Topology {
        Topology { kind: TopologyKind::Line, n_sites: self.n_sites }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} N={}", self.kind, self.n_sites)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coin {
    L,
    R,
}

impl Coin {
    pub fn index(self) -> usize {
        match self {
            Coin::L => 0,
            Coin::R => 1,
        }
    }

    pub fn from_index(i: usize) -> Coin {
        if i.is_multiple_of(2) {
            Coin::L
        } else {
            Coin::R
        }
    }
}

impl FromStr for Coin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(Coin::L),
            "R" | "r" => Ok(Coin::R),
            other => Err(Error::Parse(format!("coin must be L or R, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub site: usize,
    pub coin: Coin,
}

impl BasisIndex {
    pub fn new(site: usize, coin: Coin) -> Self {
        BasisIndex { site, coin }
    }

    pub fn flat(self) -> usize {
        2 * self.site + self.coin.index()
    }

    pub fn from_flat(i: usize) -> Self {
        BasisIndex { site: i / 2, coin: Coin::from_index(i) }
    }
}

pub fn two_particle_index(topology: &Topology, a: BasisIndex, b: BasisIndex) -> usize {
    topology.dim() * a.flat() + b.flat()
}

/// Hadamard rows; the coin is real so every step unitary is real.
const HADAMARD: [[f64; 2]; 2] = [[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]];

pub fn hadamard() -> Operator {
    Operator::from_fn(2, 2, |r, c| c64(HADAMARD[r][c], 0.0))
}

/// Local reflection σx.
pub fn local_reflection() -> Operator {
    Operator::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// C = I ⊗ H.
pub fn build_coin(topology: &Topology) -> Operator {
    kron(&identity(topology.n_sites()), &hadamard())
}

/// R = I ⊗ σx.
pub fn build_reflection(topology: &Topology) -> Operator {
    kron(&identity(topology.n_sites()), &local_reflection())
}

/// Destination index of each basis state under the shift S_K.
fn shift_permutation(topology: &Topology, config: &EdgeConfig) -> Result<Vec<usize>> {
    config.check(topology)?;
    let n = topology.n_sites();
    let mut perm = vec![0; 2 * n];
    for s in 0..n {
        perm[2 * s + 1] = match topology.right_edge(s) {
            Some(e) if config.contains(e) => 2 * ((s + 1) % n) + 1,
            _ => 2 * s,
        };
        perm[2 * s] = match topology.left_edge(s) {
            Some(e) if config.contains(e) => 2 * ((s + n - 1) % n),
            _ => 2 * s + 1,
        };
    }
    Ok(perm)
}

/// S_K: transport along present edges, reflect in place at missing ones.
pub fn build_shift(topology: &Topology, config: &EdgeConfig) -> Result<Operator> {
    let perm = shift_permutation(topology, config)?;
    let d = topology.dim();
    let mut s = Operator::zeros(d, d);
    for (j, &dst) in perm.iter().enumerate() {
        s[(dst, j)] = ONE;
    }
    Ok(s)
}

/// U_K = S_K C as a dense matrix.
pub fn step_unitary(topology: &Topology, config: &EdgeConfig) -> Result<Operator> {
    Ok(StepUnitary::new(topology, config)?.to_dense())
}

pub fn two_particle_unitary(u: &Operator) -> Operator {
    kron(u, u)
}

/// Sparse U_K = S_K C: `(U v)[perm[j]] = sum_k H[j % 2][k] v[2 (j / 2) + k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepUnitary {
    perm: Vec<usize>,
}

impl StepUnitary {
    pub fn new(topology: &Topology, config: &EdgeConfig) -> Result<Self> {
        Ok(StepUnitary { perm: shift_permutation(topology, config)? })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn to_dense(&self) -> Operator {
        let d = self.dim();
        let mut u = Operator::zeros(d, d);
        for (j, &dst) in self.perm.iter().enumerate() {
            let base = j & !1;
            let h = HADAMARD[j & 1];
            u[(dst, base)] = c64(h[0], 0.0);
            u[(dst, base + 1)] = c64(h[1], 0.0);
        }
        u
    }

    /// Applies U to one tensor factor of `x`, laid out as `[outer][d][inner]`.
    fn apply_factor(&self, x: &[Complex64], out: &mut [Complex64], inner: usize) {
        let d = self.dim();
        let block = d * inner;
        for (xb, ob) in x.chunks_exact(block).zip(out.chunks_exact_mut(block)) {
            for (j, &dst) in self.perm.iter().enumerate() {
                let h = HADAMARD[j & 1];
                let s0 = (j & !1) * inner;
                let s1 = s0 + inner;
                let o = dst * inner;
                for t in 0..inner {
                    ob[o + t] = xb[s0 + t] * h[0] + xb[s1 + t] * h[1];
                }
            }
        }
    }

    /// U^{⊗p} applied to a vector of length (2N)^p.
    pub fn apply(&self, particles: usize, x: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        assert_eq!(x.len(), d.pow(particles as u32), "vector length");
        let mut cur = x.to_vec();
        let mut out = vec![ZERO; x.len()];
        for f in 0..particles {
            let inner = d.pow((particles - 1 - f) as u32);
            self.apply_factor(&cur, &mut out, inner);
            std::mem::swap(&mut cur, &mut out);
        }
        cur
    }

    /// U^{⊗p} applied to every column of `m`.
    pub fn apply_columns(&self, particles: usize, m: &Operator) -> Operator {
        let d = self.dim();
        assert_eq!(m.nrows(), d.pow(particles as u32), "row count");
        // column-major storage is [column][row], so each factor pass covers all columns at once
        let mut cur = m.as_slice().to_vec();
        let mut out = vec![ZERO; cur.len()];
        for f in 0..particles {
            let inner = d.pow((particles - 1 - f) as u32);
            self.apply_factor(&cur, &mut out, inner);
            std::mem::swap(&mut cur, &mut out);
        }
        Operator::from_vec(m.nrows(), m.ncols(), cur)
    }

    /// U^{⊗p} ρ U^{⊗p}†.
    pub fn conjugate(&self, particles: usize, rho: &Operator) -> Operator {
        let mut buf = Vec::new();
        let mut out = Vec::new();
        self.conjugate_into(particles, rho, &mut buf, &mut out);
        Operator::from_vec(rho.nrows(), rho.ncols(), out)
    }

    /// [`conjugate`](Self::conjugate) into a column-major buffer, reusing `scratch` and `out`.
    ///
    /// U is real, so U ρ Uᵀ applies U to every one of the 2p tensor factors of
    /// the column-major buffer `[c_1..c_p][r_1..r_p]`.
    pub fn conjugate_into(&self, particles: usize, rho: &Operator, scratch: &mut Vec<Complex64>, out: &mut Vec<Complex64>) {
        let d = self.dim();
        assert_eq!(rho.nrows(), d.pow(particles as u32), "row count");
        assert_eq!(rho.ncols(), rho.nrows(), "square operator");
        let factors = 2 * particles;
        out.clear();
        out.extend_from_slice(rho.as_slice());
        scratch.resize(out.len(), ZERO);
        for f in 0..factors {
            let inner = d.pow((factors - 1 - f) as u32);
            self.apply_factor(out, scratch, inner);
            std::mem::swap(out, scratch);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, max_abs_diff};
    use crate::percolation::enumerate_configs;

    fn full(t: &Topology) -> EdgeConfig {
        EdgeConfig::full(t)
    }

    fn ket(d: usize, i: usize) -> Operator {
        let mut v = Operator::zeros(d, 1);
        v[(i, 0)] = ONE;
        v
    }

    #[test]
    fn rejects_single_site() {
        assert!(Topology::line(1).is_err());
        assert!(Topology::circle(1).is_err());
        assert!(Topology::line(0).is_err());
    }

    #[test]
    fn edge_sets() {
        assert_eq!(Topology::line(4).unwrap().edges(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(Topology::circle(3).unwrap().edges(), vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn coin_blocks() {
        let h = hadamard();
        let s = FRAC_1_SQRT_2;
        assert_eq!(h[(0, 0)], c64(s, 0.0));
        assert_eq!(h[(1, 1)], c64(-s, 0.0));
        let t = Topology::line(2).unwrap();
        let c = build_coin(&t);
        assert_eq!(c.view((0, 0), (2, 2)), h);
        assert_eq!(c.view((2, 2), (2, 2)), h);
        assert_eq!(c[(0, 2)], ZERO);
        assert!(is_unitary(&build_coin(&Topology::line(5).unwrap()), 1e-12));
    }

    #[test]
    fn reflection() {
        let t = Topology::line(4).unwrap();
        let r = build_reflection(&t);
        assert_eq!(&r * &r, identity(8));
        let rh = local_reflection() * hadamard();
        let s = FRAC_1_SQRT_2;
        let expected = Operator::from_row_slice(2, 2, &[c64(s, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(s, 0.0)]);
        assert!(max_abs_diff(&rh, &expected) < 1e-15);
        for l in [c64(s, s), c64(s, -s)] {
            let shifted = &rh - identity(2) * l;
            assert!(shifted.determinant().norm() < 1e-15);
        }
    }

    #[test]
    fn empty_config_shift_is_reflection() {
        for t in [Topology::line(4).unwrap(), Topology::circle(5).unwrap()] {
            let s = build_shift(&t, &EdgeConfig::empty(&t)).unwrap();
            assert_eq!(s, build_reflection(&t));
            let u = step_unitary(&t, &EdgeConfig::empty(&t)).unwrap();
            assert!(max_abs_diff(&u, &(build_reflection(&t) * build_coin(&t))) < 1e-15);
        }
    }

    #[test]
    fn full_line_two_sites() {
        let t = Topology::line(2).unwrap();
        let s = build_shift(&t, &full(&t)).unwrap();
        let idx = |site, coin| BasisIndex::new(site, coin).flat();
        let d = t.dim();
        assert_eq!(&s * ket(d, idx(0, Coin::R)), ket(d, idx(1, Coin::R)));
        assert_eq!(&s * ket(d, idx(1, Coin::L)), ket(d, idx(0, Coin::L)));
        assert_eq!(&s * ket(d, idx(1, Coin::R)), ket(d, idx(1, Coin::L)));
        assert_eq!(&s * ket(d, idx(0, Coin::L)), ket(d, idx(0, Coin::R)));
    }

    #[test]
    fn full_circle_wraps() {
        let t = Topology::circle(3).unwrap();
        let s = build_shift(&t, &full(&t)).unwrap();
        let idx = |site, coin| BasisIndex::new(site, coin).flat();
        assert_eq!(&s * ket(6, idx(2, Coin::R)), ket(6, idx(0, Coin::R)));
        assert_eq!(&s * ket(6, idx(0, Coin::L)), ket(6, idx(2, Coin::L)));
    }

    #[test]
    fn invalid_edge_rejected() {
        let t = Topology::line(3).unwrap();
        let bad = EdgeConfig::from_edges(&Topology::circle(3).unwrap(), &[2]).unwrap();
        assert!(build_shift(&t, &bad).is_err());
    }

    #[test]
    fn unitarity_all_configs() {
        for n in 2..=6 {
            for t in [Topology::line(n).unwrap(), Topology::circle(n).unwrap()] {
                for k in enumerate_configs(&t).unwrap() {
                    let s = build_shift(&t, &k).unwrap();
                    for r in 0..s.nrows() {
                        assert_eq!(s.row(r).iter().filter(|x| **x == ONE).count(), 1);
                        assert_eq!(s.column(r).iter().filter(|x| **x == ONE).count(), 1);
                    }
                    let u = step_unitary(&t, &k).unwrap();
                    assert!(is_unitary(&u, 1e-12));
                    assert!(max_abs_diff(&u, &(s * build_coin(&t))) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn circle_without_wrap_edge_is_line() {
        for n in 2..=6 {
            let c = Topology::circle(n).unwrap();
            let l = c.as_line();
            for k in enumerate_configs(&l).unwrap() {
                let kc = EdgeConfig::from_mask(&c, k.mask()).unwrap();
                assert_eq!(build_shift(&c, &kc).unwrap(), build_shift(&l, &k).unwrap());
            }
        }
    }

    #[test]
    fn two_particle_dims_and_unitarity() {
        let t = Topology::line(2).unwrap();
        let u = step_unitary(&t, &full(&t)).unwrap();
        let uu = two_particle_unitary(&u);
        assert_eq!(uu.nrows(), 16);
        assert!(is_unitary(&uu, 1e-12));
    }

    #[test]
    fn sparse_action_matches_dense() {
        let t = Topology::circle(3).unwrap();
        for k in enumerate_configs(&t).unwrap() {
            let su = StepUnitary::new(&t, &k).unwrap();
            let u = su.to_dense();
            let uu = two_particle_unitary(&u);
            let rho = Operator::from_fn(36, 36, |r, c| c64((r * 7 + c) as f64 % 5.0, (r as f64 - c as f64) / 9.0));
            let dense = &uu * &rho * uu.adjoint();
            assert!(max_abs_diff(&su.conjugate(2, &rho), &dense) < 1e-13);
            let v: Vec<Complex64> = (0..6).map(|i| c64(i as f64, 1.0)).collect();
            let dv = &u * nalgebra::DVector::from_vec(v.clone());
            let sv = su.apply(1, &v);
            assert!(dv.iter().zip(sv.iter()).all(|(a, b)| (a - b).norm() < 1e-14));
        }
    }
}
