//! Analytic attractor spaces of the one- and two-particle percolated Hadamard walk.
//!
//! Common eigenstates of every step unitary give the p-attractors `|a⟩⟨b|`.
//! The remaining two-particle attractors are tensor products of one-particle
//! attractors with at least one identity factor, and their SWAP multiples.

pub mod conditions;
pub mod oracle;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{two_particle_index, BasisIndex, Coin, StepUnitary, Topology};
use crate::linalg::{
    c64, hs_inner, hs_norm, identity, kron, kron_vec, outer, Operator, StateVector, I,
    ONE, ZERO,
};
use crate::percolation::enumerate_configs;

/// The only possible attractor eigenvalues, `i^k` for `k = 0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Eigenvalue {
    One,
    I,
    MinusI,
    MinusOne,
}

impl Eigenvalue {
    pub const ALL: [Eigenvalue; 4] = [Eigenvalue::One, Eigenvalue::I, Eigenvalue::MinusI, Eigenvalue::MinusOne];

    /// Exponent `k` with λ = i^k.
    pub fn power(self) -> u8 {
        match self {
            Eigenvalue::One => 0,
            Eigenvalue::I => 1,
            Eigenvalue::MinusOne => 2,
            Eigenvalue::MinusI => 3,
        }
    }

    pub fn from_power(k: i32) -> Self {
        match k.rem_euclid(4) {
            0 => Eigenvalue::One,
            1 => Eigenvalue::I,
            2 => Eigenvalue::MinusOne,
            _ => Eigenvalue::MinusI,
        }
    }

    pub fn value(self) -> Complex64 {
        match self {
            Eigenvalue::One => ONE,
            Eigenvalue::I => I,
            Eigenvalue::MinusI => -I,
            Eigenvalue::MinusOne => -ONE,
        }
    }

    /// λ^n
    pub fn pow(self, n: u64) -> Complex64 {
        Eigenvalue::from_power((self.power() as u64 * (n % 4)) as i32).value()
    }

    /// Nearest candidate and its distance.
    pub fn nearest(z: Complex64) -> (Eigenvalue, f64) {
        Eigenvalue::ALL
            .iter()
            .map(|&e| (e, (z - e.value()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
    }
}

impl fmt::Display for Eigenvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Eigenvalue::One => "1",
            Eigenvalue::I => "i",
            Eigenvalue::MinusI => "-i",
            Eigenvalue::MinusOne => "-1",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    PhiPlus,
    PhiMinus,
    PlusPlus,
    MinusMinus,
    PlusMinus,
    MinusPlus,
    W,
    WPrime,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StateLabel::PhiPlus => "phi+",
            StateLabel::PhiMinus => "phi-",
            StateLabel::PlusPlus => "Phi++",
            StateLabel::MinusMinus => "Phi--",
            StateLabel::PlusMinus => "Phi+-",
            StateLabel::MinusPlus => "Phi-+",
            StateLabel::W => "Phi_w",
            StateLabel::WPrime => "Phi_w'",
        };
        f.write_str(s)
    }
}

/// A vector with `U_K v = eigenvalue * v` for every configuration K.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonEigenstate {
    pub label: StateLabel,
    pub eigenvalue: Complex64,
    pub vector: StateVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    PAttractor(StateLabel, StateLabel),
    /// Index into the tensor-product list followed by its SWAP multiples.
    NonP(u8),
    /// Circle without single-particle eigenstates: identity, SWAP, Φ_w projector.
    Circle(u8),
    Oracle,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::PAttractor(a, b) => write!(f, "p-attractor({a},{b})"),
            Provenance::NonP(id) => write!(f, "non-p({id})"),
            Provenance::Circle(0) => write!(f, "non-p(I)"),
            Provenance::Circle(1) => write!(f, "non-p(W)"),
            Provenance::Circle(_) => write!(f, "p-attractor(Phi_w,Phi_w)"),
            Provenance::Oracle => write!(f, "oracle"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attractor {
    pub operator: Operator,
    pub eigenvalue: Eigenvalue,
    pub provenance: Provenance,
}

/// λ± of the local block 𝓡H.
pub fn lambda_plus() -> Complex64 {
    c64(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

pub fn lambda_minus() -> Complex64 {
    c64(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
}

/// Site phases `i^s` (for φ+) or `(-i)^s` (for φ−).
fn site_phase(s: usize, plus: bool) -> Complex64 {
    let k = if plus { s % 4 } else { (4 - s % 4) % 4 };
    Eigenvalue::from_power(k as i32).value()
}

fn single_particle_state(topology: &Topology, plus: bool) -> StateVector {
    let n = topology.n_sites();
    let norm = 1.0 / (2.0 * n as f64).sqrt();
    // |±⟩ = (±i|L⟩ + |R⟩)/√2
    let coin_l = if plus { I } else { -I };
    let mut v = StateVector::zeros(topology.dim());
    for s in 0..n {
        let ph = site_phase(s, plus) * norm;
        v[BasisIndex::new(s, Coin::L).flat()] = ph * coin_l;
        v[BasisIndex::new(s, Coin::R).flat()] = ph;
    }
    v
}

/// φ± for lines and for circles with 4 | N; empty otherwise.
pub fn common_eigenstates_1p(topology: &Topology) -> Vec<CommonEigenstate> {
    if topology.is_circle() && !topology.n_sites().is_multiple_of(4) {
        return Vec::new();
    }
    vec![
        CommonEigenstate {
            label: StateLabel::PhiPlus,
            eigenvalue: lambda_plus(),
            vector: single_particle_state(topology, true),
        },
        CommonEigenstate {
            label: StateLabel::PhiMinus,
            eigenvalue: lambda_minus(),
            vector: single_particle_state(topology, false),
        },
    ]
}

/// Equal weight on every same-site, same-coin two-particle ket.
pub fn phi_w(topology: &Topology) -> StateVector {
    let d = topology.dim();
    let amp = c64(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = StateVector::zeros(d * d);
    for j in 0..d {
        let b = BasisIndex::from_flat(j);
        v[two_particle_index(topology, b, b)] = amp;
    }
    v
}

/// Two-particle common eigenstates in the order Φ++, Φ−−, Φ+−, Φ−+, Φ_w′,
/// or `[Φ_w]` on circles without single-particle eigenstates.
pub fn common_eigenstates_2p(topology: &Topology) -> Vec<CommonEigenstate> {
    let singles = common_eigenstates_1p(topology);
    let w = phi_w(topology);
    if singles.is_empty() {
        return vec![CommonEigenstate { label: StateLabel::W, eigenvalue: ONE, vector: w }];
    }
    let (p, m) = (&singles[0].vector, &singles[1].vector);
    let pm = kron_vec(p, m);
    let mp = kron_vec(m, p);
    let n = topology.n_sites() as f64;
    let w_prime = (&w - (&pm + &mp).unscale((2.0 * n).sqrt())).scale((n / (n - 1.0)).sqrt());
    vec![
        CommonEigenstate { label: StateLabel::PlusPlus, eigenvalue: I, vector: kron_vec(p, p) },
        CommonEigenstate { label: StateLabel::MinusMinus, eigenvalue: -I, vector: kron_vec(m, m) },
        CommonEigenstate { label: StateLabel::PlusMinus, eigenvalue: ONE, vector: pm },
        CommonEigenstate { label: StateLabel::MinusPlus, eigenvalue: ONE, vector: mp },
        CommonEigenstate { label: StateLabel::WPrime, eigenvalue: ONE, vector: w_prime },
    ]
}

fn eigen_label(z: Complex64) -> Eigenvalue {
    Eigenvalue::nearest(z).0
}

/// All |Φ_a⟩⟨Φ_b| with eigenvalue a·b̄, row-major over the common-eigenstate list.
pub fn build_p_attractors(topology: &Topology) -> Vec<Attractor> {
    let states = common_eigenstates_2p(topology);
    outer_products(&states)
}

fn outer_products(states: &[CommonEigenstate]) -> Vec<Attractor> {
    let mut out = Vec::with_capacity(states.len() * states.len());
    for a in states {
        for b in states {
            out.push(Attractor {
                operator: outer(&a.vector, &b.vector),
                eigenvalue: eigen_label(a.eigenvalue * b.eigenvalue.conj()),
                provenance: Provenance::PAttractor(a.label, b.label),
            });
        }
    }
    out
}

/// SWAP of the two particles' full registers.
pub fn swap_operator(topology: &Topology) -> Operator {
    let d = topology.dim();
    let mut w = Operator::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            w[(a * d + b, b * d + a)] = ONE;
        }
    }
    w
}

/// Tensor-product non-p-attractors (ids 0..9) and their SWAP multiples (ids 9..18).
///
/// Circles without single-particle eigenstates keep only the identity and SWAP.
pub fn build_non_p_attractors(topology: &Topology) -> Vec<Attractor> {
    let d = topology.dim();
    let w = swap_operator(topology);
    let singles = common_eigenstates_1p(topology);
    if singles.is_empty() {
        return vec![
            Attractor { operator: identity(d * d), eigenvalue: Eigenvalue::One, provenance: Provenance::NonP(0) },
            Attractor { operator: w, eigenvalue: Eigenvalue::One, provenance: Provenance::NonP(1) },
        ];
    }
    let (p, m) = (&singles[0].vector, &singles[1].vector);
    let one = identity(d);
    let pp = outer(p, p);
    let mm = outer(m, m);
    // |φ+⟩⟨φ−| carries λ+ λ̄− = i
    let pm = outer(p, m);
    let mp = outer(m, p);
    let base: [(Operator, Eigenvalue); 9] = [
        (kron(&one, &pp), Eigenvalue::One),
        (kron(&one, &mm), Eigenvalue::One),
        (kron(&pp, &one), Eigenvalue::One),
        (kron(&mm, &one), Eigenvalue::One),
        (identity(d * d), Eigenvalue::One),
        (kron(&one, &pm), Eigenvalue::I),
        (kron(&pm, &one), Eigenvalue::I),
        (kron(&one, &mp), Eigenvalue::MinusI),
        (kron(&mp, &one), Eigenvalue::MinusI),
    ];
    let mut out: Vec<Attractor> = base
        .iter()
        .enumerate()
        .map(|(id, (x, l))| Attractor { operator: x.clone(), eigenvalue: *l, provenance: Provenance::NonP(id as u8) })
        .collect();
    for (id, (x, l)) in base.iter().enumerate() {
        out.push(Attractor { operator: &w * x, eigenvalue: *l, provenance: Provenance::NonP((id + 9) as u8) });
    }
    out
}

/// Candidate list in orthogonalization order.
pub fn analytic_attractors(topology: &Topology) -> Vec<Attractor> {
    if common_eigenstates_1p(topology).is_empty() {
        let d = topology.dim();
        let w = phi_w(topology);
        return vec![
            Attractor { operator: identity(d * d), eigenvalue: Eigenvalue::One, provenance: Provenance::Circle(0) },
            Attractor { operator: swap_operator(topology), eigenvalue: Eigenvalue::One, provenance: Provenance::Circle(1) },
            Attractor { operator: outer(&w, &w), eigenvalue: Eigenvalue::One, provenance: Provenance::Circle(2) },
        ];
    }
    let mut all = build_p_attractors(topology);
    all.extend(build_non_p_attractors(topology));
    all
}

/// One-particle attractors: the four |φ_a⟩⟨φ_b| and the identity (identity alone
/// on circles without common eigenstates).
pub fn analytic_attractors_1p(topology: &Topology) -> Vec<Attractor> {
    let mut out = outer_products(&common_eigenstates_1p(topology));
    out.push(Attractor {
        operator: identity(topology.dim()),
        eigenvalue: Eigenvalue::One,
        provenance: Provenance::NonP(0),
    });
    out
}

/// Hilbert–Schmidt orthonormal attractors, grouped by eigenvalue in the order 1, i, −i, −1.
#[derive(Debug, Clone)]
pub struct AttractorBasis {
    elements: Vec<Attractor>,
}

/// Post-projection norms below this count as linear dependence.
pub const DEPENDENCE_TOL: f64 = 1e-10;

impl AttractorBasis {
    /// Modified Gram–Schmidt with one reorthogonalization pass, per eigenvalue
    /// sector, in candidate order.
    pub fn orthonormalize(candidates: Vec<Attractor>) -> Result<Self> {
        let mut elements = Vec::with_capacity(candidates.len());
        for sector in Eigenvalue::ALL {
            let mut q: Vec<Attractor> = Vec::new();
            for cand in candidates.iter().filter(|a| a.eigenvalue == sector) {
                let mut y = cand.operator.clone();
                for _ in 0..2 {
                    for e in &q {
                        let coef = hs_inner(&e.operator, &y);
                        y -= &e.operator * coef;
                    }
                }
                let norm = hs_norm(&y);
                if norm < DEPENDENCE_TOL {
                    return Err(Error::Dependent(format!("{} (λ = {sector}, residual norm {norm:e})", cand.provenance)));
                }
                q.push(Attractor { operator: y.unscale(norm), eigenvalue: sector, provenance: cand.provenance });
            }
            elements.extend(q);
        }
        Ok(AttractorBasis { elements })
    }

    /// Accepts already orthonormal elements after a Gram check.
    pub fn from_orthonormal(elements: Vec<Attractor>, tol: f64) -> Result<Self> {
        let basis = AttractorBasis { elements };
        let dev = basis.gram_deviation();
        if dev > tol {
            return Err(Error::NotOrthonormal(dev));
        }
        Ok(basis)
    }

    pub fn elements(&self) -> &[Attractor] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, |a| a.operator.nrows())
    }

    pub fn sector(&self, lambda: Eigenvalue) -> impl Iterator<Item = &Attractor> {
        self.elements.iter().filter(move |a| a.eigenvalue == lambda)
    }

    /// Sizes in the order 1, i, −i, −1.
    pub fn sector_sizes(&self) -> [usize; 4] {
        Eigenvalue::ALL.map(|l| self.sector(l).count())
    }

    /// Largest entry of |G − I| for the Hilbert–Schmidt Gram matrix G.
    pub fn gram_deviation(&self) -> f64 {
        let n = self.elements.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let g = hs_inner(&self.elements[i].operator, &self.elements[j].operator);
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// Orthonormal two-particle attractor basis.
pub fn orthonormal_basis(topology: &Topology) -> Result<AttractorBasis> {
    AttractorBasis::orthonormalize(analytic_attractors(topology))
}

/// Orthonormal one-particle attractor basis.
pub fn orthonormal_basis_1p(topology: &Topology) -> Result<AttractorBasis> {
    AttractorBasis::orthonormalize(analytic_attractors_1p(topology))
}

fn particles_for(topology: &Topology, dim: usize) -> Result<usize> {
    let d = topology.dim();
    if dim == d {
        Ok(1)
    } else if dim == d * d {
        Ok(2)
    } else {
        Err(Error::DimensionMismatch { expected: d * d, got: dim })
    }
}

/// max_K ‖U_K X U_K† − λX‖_max over all configurations; works for one or two particles.
pub fn attractor_residual(x: &Operator, lambda: Complex64, topology: &Topology) -> Result<f64> {
    let particles = particles_for(topology, x.nrows())?;
    let target = x * lambda;
    let (mut scratch, mut out) = (Vec::new(), Vec::new());
    let mut worst: f64 = 0.0;
    for k in enumerate_configs(topology)? {
        StepUnitary::new(topology, &k)?.conjugate_into(particles, x, &mut scratch, &mut out);
        for (a, b) in out.iter().zip(target.as_slice()) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

/// max_K ‖U_K v − λv‖ over entries.
pub fn eigenstate_residual(v: &StateVector, lambda: Complex64, topology: &Topology) -> Result<f64> {
    let particles = particles_for(topology, v.len())?;
    let mut worst: f64 = 0.0;
    for k in enumerate_configs(topology)? {
        let u = StepUnitary::new(topology, &k)?;
        let out = u.apply(particles, v.as_slice());
        for (a, b) in out.iter().zip(v.iter()) {
            worst = worst.max((a - b * lambda).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_coin, build_reflection, build_shift, step_unitary, two_particle_unitary};
    use crate::percolation::EdgeConfig;
    use crate::linalg::max_abs_diff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> Topology {
        Topology::line(n).unwrap()
    }

    fn circle(n: usize) -> Topology {
        Topology::circle(n).unwrap()
    }

    #[test]
    fn eigenvalue_arithmetic() {
        assert_eq!(Eigenvalue::from_power(1 - 3), Eigenvalue::MinusOne);
        assert_eq!(Eigenvalue::I.pow(3), -I);
        assert_eq!(Eigenvalue::MinusOne.pow(0), ONE);
        assert_eq!(Eigenvalue::nearest(c64(0.0, -0.9)).0, Eigenvalue::MinusI);
    }

    #[test]
    fn single_particle_eigenstates() {
        let t = line(4);
        let states = common_eigenstates_1p(&t);
        assert_eq!(states.len(), 2);
        for st in &states {
            assert!((st.vector.norm() - 1.0).abs() < 1e-15);
            assert!(eigenstate_residual(&st.vector, st.eigenvalue, &t).unwrap() < 1e-10);
        }
        // |φ+⟩ has amplitude i^s/2 on |+⟩ = (i|L⟩ + |R⟩)/√2
        let p = &states[0].vector;
        for s in 0..4 {
            let r = p[BasisIndex::new(s, Coin::R).flat()] * 2f64.sqrt();
            assert!((r - site_phase(s, true) * 0.5).norm() < 1e-15);
            assert!((p[BasisIndex::new(s, Coin::L).flat()] - I * p[BasisIndex::new(s, Coin::R).flat()]).norm() < 1e-15);
        }
        assert!(common_eigenstates_1p(&circle(5)).is_empty());
        assert_eq!(common_eigenstates_1p(&circle(8)).len(), 2);
    }

    #[test]
    fn eigenstates_meet_coin_and_shift_conditions() {
        for t in [line(3), line(6), circle(4)] {
            let rc = build_reflection(&t) * build_coin(&t);
            for st in common_eigenstates_1p(&t) {
                let coin = (&rc * &st.vector - &st.vector * st.eigenvalue).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(coin < 1e-10);
                let empty = build_shift(&t, &EdgeConfig::empty(&t)).unwrap().adjoint() * &st.vector;
                for k in enumerate_configs(&t).unwrap() {
                    let moved = build_shift(&t, &k).unwrap().adjoint() * &st.vector;
                    assert!((moved - &empty).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn two_particle_eigenstates() {
        let t = line(4);
        let states = common_eigenstates_2p(&t);
        assert_eq!(states.len(), 5);
        for st in &states {
            assert!(eigenstate_residual(&st.vector, st.eigenvalue, &t).unwrap() < 1e-10, "{}", st.label);
            assert!((st.vector.norm() - 1.0).abs() < 1e-12);
        }
        let wp = &states[4].vector;
        assert!(wp.dotc(&states[2].vector).norm() < 1e-12);
        assert!(wp.dotc(&states[3].vector).norm() < 1e-12);

        let c5 = common_eigenstates_2p(&circle(5));
        assert_eq!(c5.len(), 1);
        assert_eq!(c5[0].eigenvalue, ONE);
        let w = &c5[0].vector;
        let amp = 1.0 / 10f64.sqrt();
        for j in 0..10 {
            let b = BasisIndex::from_flat(j);
            assert!((w[two_particle_index(&circle(5), b, b)].re - amp).abs() < 1e-15);
        }
        assert!((w.norm_squared() - 1.0).abs() < 1e-14);
        assert!(eigenstate_residual(w, ONE, &circle(5)).unwrap() < 1e-12);
    }

    #[test]
    fn p_attractor_sectors() {
        let ps = build_p_attractors(&line(4));
        assert_eq!(ps.len(), 25);
        let count = |l| ps.iter().filter(|a| a.eigenvalue == l).count();
        assert_eq!(Eigenvalue::ALL.map(count), [11, 6, 6, 2]);
        for a in &ps {
            assert!(attractor_residual(&a.operator, a.eigenvalue.value(), &line(4)).unwrap() < 1e-10);
        }
        let c = build_p_attractors(&circle(5));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].provenance, Provenance::PAttractor(StateLabel::W, StateLabel::W));
    }

    #[test]
    fn non_p_attractor_sectors() {
        let t = line(4);
        let np = build_non_p_attractors(&t);
        assert_eq!(np.len(), 18);
        let count = |l| np.iter().filter(|a| a.eigenvalue == l).count();
        assert_eq!(Eigenvalue::ALL.map(count), [10, 4, 4, 0]);
        for a in &np {
            assert!(attractor_residual(&a.operator, a.eigenvalue.value(), &t).unwrap() < 1e-10, "{}", a.provenance);
        }
        let w = swap_operator(&t);
        assert!(attractor_residual(&(&w * identity(64)), ONE, &t).unwrap() < 1e-12);
    }

    #[test]
    fn analytic_set_has_full_rank() {
        for t in [line(2), line(4), circle(4)] {
            let all = analytic_attractors(&t);
            assert_eq!(all.len(), 43);
            let n = all.len();
            let g = Operator::from_fn(n, n, |i, j| hs_inner(&all[i].operator, &all[j].operator));
            let sv = g.singular_values();
            let smax = sv.max();
            let rank = sv.iter().filter(|s| **s > 1e-9 * smax).count();
            assert_eq!(rank, 43);
        }
    }

    #[test]
    fn swap_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = line(3);
        let w = swap_operator(&t);
        assert_eq!(&w * &w, identity(36));
        assert_eq!(w.adjoint(), w);
        for r in 0..36 {
            assert_eq!(w.row(r).iter().filter(|x| **x == ONE).count(), 1);
        }
        let rand_op = |rng: &mut ChaCha8Rng| Operator::from_fn(6, 6, |_, _| c64(rng.gen(), rng.gen()));
        let a = rand_op(&mut rng);
        let b = rand_op(&mut rng);
        assert!(max_abs_diff(&(&w * kron(&a, &b) * &w), &kron(&b, &a)) < 1e-14);
        for k in enumerate_configs(&t).unwrap() {
            let uu = two_particle_unitary(&step_unitary(&t, &k).unwrap());
            assert!(max_abs_diff(&(&w * &uu), &(&uu * &w)) < 1e-12);
        }
    }

    #[test]
    fn residual_discriminates() {
        let t = line(3);
        assert!(attractor_residual(&identity(36), ONE, &t).unwrap() < 1e-15);
        assert!(attractor_residual(&swap_operator(&t), ONE, &t).unwrap() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Operator::from_fn(36, 36, |_, _| c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let h = &a + a.adjoint();
        assert!(attractor_residual(&h, ONE, &t).unwrap() > 1e-3);
        assert!(attractor_residual(&identity(7), ONE, &t).is_err());
    }

    #[test]
    fn basis_sectors_and_gram() {
        let b = orthonormal_basis(&line(4)).unwrap();
        assert_eq!(b.sector_sizes(), [21, 10, 10, 2]);
        assert!(b.gram_deviation() < 1e-10);
        let c = orthonormal_basis(&circle(5)).unwrap();
        assert_eq!(c.sector_sizes(), [3, 0, 0, 0]);
        let one = orthonormal_basis_1p(&line(5)).unwrap();
        assert_eq!(one.sector_sizes(), [3, 1, 1, 0]);
        assert_eq!(orthonormal_basis_1p(&circle(6)).unwrap().len(), 1);
    }

    #[test]
    fn circle_basis_closed_form() {
        let t = circle(5);
        let n = 5.0f64;
        let b = orthonormal_basis(&t).unwrap();
        let d = 100;
        let a1 = identity(d).unscale(2.0 * n);
        let w = swap_operator(&t);
        let a2 = (&w - &a1).unscale((4.0 * n * n - 1.0).sqrt());
        let pw = phi_w(&t);
        let f = outer(&pw, &pw).scale(2.0 * n);
        let a3 = (&f - &a1 - a2.scale(((2.0 * n - 1.0) / (2.0 * n + 1.0)).sqrt()))
            .scale(((2.0 * n + 1.0) / (4.0 * n * (n + 1.0) * (2.0 * n - 1.0))).sqrt());
        let e = b.elements();
        assert!(max_abs_diff(&e[0].operator, &a1) < 1e-14);
        assert!(max_abs_diff(&e[1].operator, &a2) < 1e-14);
        assert!(max_abs_diff(&e[2].operator, &a3) < 1e-14);
    }

    #[test]
    fn swap_closure() {
        let t = line(3);
        let w = swap_operator(&t);
        for a in analytic_attractors(&t) {
            assert!(attractor_residual(&(&w * &a.operator), a.eigenvalue.value(), &t).unwrap() < 1e-10);
        }
    }

    #[test]
    fn circle_attractors_are_line_attractors() {
        for n in [4, 5] {
            let c = circle(n);
            for a in orthonormal_basis(&c).unwrap().elements() {
                assert!(attractor_residual(&a.operator, a.eigenvalue.value(), &c.as_line()).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let t = line(2);
        let a = Attractor { operator: identity(16), eigenvalue: Eigenvalue::One, provenance: Provenance::Oracle };
        assert!(matches!(AttractorBasis::from_orthonormal(vec![a], 1e-10), Err(Error::NotOrthonormal(_))));
        let dup = vec![
            Attractor { operator: swap_operator(&t), eigenvalue: Eigenvalue::One, provenance: Provenance::Oracle },
            Attractor { operator: swap_operator(&t), eigenvalue: Eigenvalue::One, provenance: Provenance::Oracle },
        ];
        assert!(matches!(AttractorBasis::orthonormalize(dup), Err(Error::Dependent(_))));
    }
}
