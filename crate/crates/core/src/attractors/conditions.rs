//! The attractor equation split into a per-site-block coin condition and
//! inter-block shift conditions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{hadamard, local_reflection, Topology};
use crate::linalg::{kron, max_abs_diff, Operator, I};

use super::Eigenvalue;

/// 𝓡H ⊗ 𝓡H, the empty-configuration step on one pair of sites.
pub fn local_pair_step() -> Operator {
    let rh = local_reflection() * hadamard();
    kron(&rh, &rh)
}

/// Number of free parameters in the coin block of each eigenvalue.
pub fn coin_block_params(lambda: Eigenvalue) -> usize {
    match lambda {
        Eigenvalue::One => 6,
        Eigenvalue::I | Eigenvalue::MinusI => 4,
        Eigenvalue::MinusOne => 2,
    }
}

/// General 4×4 block B in the coin order (LL, LR, RL, RR) with
/// (𝓡H⊗𝓡H) B (𝓡H⊗𝓡H)† = λB.
pub fn coin_block(lambda: Eigenvalue, params: &[Complex64]) -> Result<Operator> {
    let want = coin_block_params(lambda);
    if params.len() != want {
        return Err(Error::InvalidParameter(format!(
            "coin block for λ = {lambda} takes {want} parameters, got {}",
            params.len()
        )));
    }
    let two = Complex64::from(2.0);
    #[rustfmt::skip]
    let entries: [Complex64; 16] = match lambda {
        Eigenvalue::One => {
            let [a, b, c, d, e, f] = [params[0], params[1], params[2], params[3], params[4], params[5]];
            [
                a, -b, -c, d,
                -e, f, a - d - f, -b - c - e,
                b + c + e, a - d - f, f, e,
                d, c, b, a,
            ]
        }
        Eigenvalue::I | Eigenvalue::MinusI => {
            let s = if lambda == Eigenvalue::I { I } else { -I };
            let [a, b, c, d] = [params[0], params[1], params[2], params[3]];
            [
                -d, a, b, -s * a - s * b - d,
                c, -s * a - s * c - d, -s * b - s * c - d, -a - b - c + two * s * d,
                -a - b - c + two * s * d, s * b + s * c + d, s * a + s * c + d, c,
                s * a + s * b + d, b, a, d,
            ]
        }
        Eigenvalue::MinusOne => {
            let [a, b] = [params[0], params[1]];
            [
                a, -b, -b, -a,
                -b, -a, -a, b,
                -b, -a, -a, b,
                -a, b, b, a,
            ]
        }
    };
    Ok(Operator::from_row_slice(4, 4, &entries))
}

/// Largest violation of the coin condition over all 4×4 site-pair blocks of a
/// two-particle operator.
pub fn coin_condition_residual(x: &Operator, lambda: Complex64, topology: &Topology) -> Result<f64> {
    let n = topology.n_sites();
    let d = topology.dim();
    if x.nrows() != d * d || x.ncols() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: x.nrows() });
    }
    let m = local_pair_step();
    let md = m.adjoint();
    let idx = |s: usize, t: usize, coins: usize| (2 * s + coins / 2) * d + 2 * t + coins % 2;
    let mut worst: f64 = 0.0;
    for s in 0..n {
        for t in 0..n {
            for u in 0..n {
                for v in 0..n {
                    let b = Operator::from_fn(4, 4, |r, c| x[(idx(s, t, r), idx(u, v, c))]);
                    let moved = &m * &b * &md;
                    worst = worst.max(max_abs_diff(&moved, &(b * lambda)));
                }
            }
        }
    }
    Ok(worst)
}

/// Edge that decides where a single-particle basis state moves: `|s,R⟩` uses
/// the edge to the right, `|s,L⟩` the edge to the left.
fn governing_edge(topology: &Topology, j: usize) -> Option<usize> {
    let s = j / 2;
    if j % 2 == 1 {
        topology.right_edge(s)
    } else {
        topology.left_edge(s)
    }
}

/// Image of `j` under the shift when its governing edge is present or absent.
fn shifted(topology: &Topology, j: usize, present: bool) -> usize {
    let n = topology.n_sites();
    let s = j / 2;
    match (j % 2 == 1, present) {
        (true, true) => 2 * ((s + 1) % n) + 1,
        (false, true) => 2 * ((s + n - 1) % n),
        (true, false) => 2 * s,
        (false, false) => 2 * s + 1,
    }
}

/// Largest violation of the shift conditions: every entry of S_K† X S_K must be
/// independent of K.
///
/// Each entry depends only on the edges governing its row and column indices,
/// so the entries are grouped by the presence pattern of those (at most four,
/// possibly coinciding) edges and each group is compared against the
/// all-absent pattern. Index coincidences and the line boundary shrink the
/// group automatically.
pub fn check_shift_conditions(x: &Operator, topology: &Topology) -> Result<f64> {
    let d = topology.dim();
    let particles = if x.nrows() == d {
        1
    } else if x.nrows() == d * d {
        2
    } else {
        return Err(Error::DimensionMismatch { expected: d * d, got: x.nrows() });
    };
    let dim = x.nrows();
    let split = |k: usize| -> Vec<usize> {
        if particles == 1 {
            vec![k]
        } else {
            vec![k / d, k % d]
        }
    };
    let join = |parts: &[usize]| parts.iter().fold(0, |acc, &p| acc * d + p);
    let mut worst: f64 = 0.0;
    let mut edges: Vec<usize> = Vec::with_capacity(4);
    for row in 0..dim {
        let rs = split(row);
        for col in 0..dim {
            let cs = split(col);
            let indices: Vec<usize> = rs.iter().chain(cs.iter()).copied().collect();
            edges.clear();
            for &j in &indices {
                if let Some(e) = governing_edge(topology, j) {
                    if !edges.contains(&e) {
                        edges.push(e);
                    }
                }
            }
            let image = |pattern: u32| -> Complex64 {
                let moved: Vec<usize> = indices
                    .iter()
                    .map(|&j| {
                        let present = governing_edge(topology, j)
                            .is_some_and(|e| pattern >> edges.iter().position(|&x| x == e).unwrap() & 1 == 1);
                        shifted(topology, j, present)
                    })
                    .collect();
                x[(join(&moved[..particles]), join(&moved[particles..]))]
            };
            let reference = image(0);
            for pattern in 1..(1u32 << edges.len()) {
                worst = worst.max((image(pattern) - reference).norm());
            }
        }
    }
    Ok(worst)
}

/// Same quantity computed from full shift matrices, max_K ‖S_K† X S_K − S_∅† X S_∅‖_max.
pub fn shift_condition_residual_direct(x: &Operator, topology: &Topology) -> Result<f64> {
    use crate::hilbert::build_shift;
    use crate::percolation::{enumerate_configs, EdgeConfig};
    let d = topology.dim();
    let lift = |s: Operator| if x.nrows() == d { s } else { kron(&s, &s) };
    let s0 = lift(build_shift(topology, &EdgeConfig::empty(topology))?);
    let base = s0.adjoint() * x * &s0;
    let mut worst: f64 = 0.0;
    for k in enumerate_configs(topology)? {
        let s = lift(build_shift(topology, &k)?);
        worst = worst.max(max_abs_diff(&(s.adjoint() * x * &s), &base));
    }
    Ok(worst)
}
