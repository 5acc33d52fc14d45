//! The random-unitary channel: exact Kraus sums, seeded trajectories and the
//! dense superoperator used by the attractor oracle.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{StepUnitary, Topology};
use crate::linalg::{kron, DensityMatrix, Operator, StateVector, ZERO};
use crate::percolation::{
    config_probability, enumerate_configs, sample_config, trajectory_seed, PercolationModel,
};

/// Largest superoperator side accepted by [`build_superoperator`].
pub const SUPEROPERATOR_GUARD: usize = 4096;

/// Trajectories per Monte-Carlo work unit.
const MC_CHUNK: usize = 256;

pub(crate) fn check_particles(particles: usize) -> Result<()> {
    if particles == 1 || particles == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("particles must be 1 or 2, got {particles}")))
    }
}

/// Φ(ρ) = Σ_K p_K U_K^{⊗p} ρ U_K^{⊗p}† with the configuration list materialized once.
#[derive(Debug, Clone)]
pub struct PercolationChannel {
    topology: Topology,
    particles: usize,
    terms: Vec<(f64, StepUnitary)>,
}

impl PercolationChannel {
    pub fn new(topology: &Topology, model: &PercolationModel, particles: usize) -> Result<Self> {
        check_particles(particles)?;
        let mut terms = Vec::new();
        for k in enumerate_configs(topology)? {
            let p = config_probability(model, &k)?;
            if p > 0.0 {
                terms.push((p, StepUnitary::new(topology, &k)?));
            }
        }
        Ok(PercolationChannel { topology: *topology, particles, terms })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.topology.dim_for(self.particles)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
        }
        let mut out = Operator::zeros(d, d);
        for (p, u) in &self.terms {
            out += u.conjugate(self.particles, rho) * Complex64::from(*p);
        }
        Ok(out)
    }

    pub fn evolve(&self, rho: &DensityMatrix, steps: usize) -> Result<DensityMatrix> {
        if rho.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.nrows() });
        }
        let mut cur = rho.clone();
        for _ in 0..steps {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }
}

pub fn apply_channel(
    state: &DensityMatrix,
    topology: &Topology,
    model: &PercolationModel,
    particles: usize,
) -> Result<DensityMatrix> {
    PercolationChannel::new(topology, model, particles)?.apply(state)
}

pub fn evolve(
    state: &DensityMatrix,
    topology: &Topology,
    model: &PercolationModel,
    particles: usize,
    steps: usize,
) -> Result<DensityMatrix> {
    PercolationChannel::new(topology, model, particles)?.evolve(state, steps)
}

/// One unravelled trajectory: `steps` sampled step unitaries applied to a pure state.
pub fn sample_trajectory(
    pure_state: &StateVector,
    topology: &Topology,
    model: &PercolationModel,
    particles: usize,
    steps: usize,
    master_seed: u64,
    trajectory_id: u64,
) -> Result<StateVector> {
    check_particles(particles)?;
    let d = topology.dim_for(particles);
    if pure_state.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: pure_state.len() });
    }
    if model.num_edges() != topology.num_edges() {
        return Err(Error::EdgeCountMismatch {
            expected: topology.num_edges(),
            got: model.num_edges(),
        });
    }
    let norm = pure_state.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("initial state norm {norm} is not 1")));
    }
    let seed = trajectory_seed(master_seed, trajectory_id);
    let mut v: Vec<Complex64> = pure_state.iter().copied().collect();
    for step in 0..steps {
        let k = sample_config(model, seed, step as u64);
        v = StepUnitary::new(topology, &k)?.apply(particles, &v);
    }
    Ok(StateVector::from_vec(v))
}

fn add_projector(acc: &mut Operator, v: &StateVector) {
    let d = v.len();
    for c in 0..d {
        let vc = v[c].conj();
        if vc == ZERO {
            continue;
        }
        let mut col = acc.column_mut(c);
        for r in 0..d {
            col[r] += v[r] * vc;
        }
    }
}

fn pairwise_sum(mut parts: Vec<Operator>) -> Option<Operator> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Trajectory average of |ψ_t⟩⟨ψ_t| over ids `0..trajectories`.
///
/// Work is split into fixed chunks of consecutive ids; chunk sums are merged
/// pairwise in id order so the result does not depend on the thread count.
pub fn monte_carlo_state(
    pure_state: &StateVector,
    topology: &Topology,
    model: &PercolationModel,
    particles: usize,
    steps: usize,
    trajectories: usize,
    master_seed: u64,
) -> Result<DensityMatrix> {
    if trajectories == 0 {
        return Err(Error::InvalidParameter("at least one trajectory is required".into()));
    }
    let d = topology.dim_for(particles);
    let chunks: Vec<(usize, usize)> = (0..trajectories)
        .step_by(MC_CHUNK)
        .map(|start| (start, (start + MC_CHUNK).min(trajectories)))
        .collect();
    let sums = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut acc = Operator::zeros(d, d);
            for id in start..end {
                let v = sample_trajectory(
                    pure_state,
                    topology,
                    model,
                    particles,
                    steps,
                    master_seed,
                    id as u64,
                )?;
                add_projector(&mut acc, &v);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = pairwise_sum(sums).expect("at least one chunk");
    Ok(total.unscale(trajectories as f64))
}

/// Column-stacked superoperator M with M vec(X) = vec(Φ(X)).
#[derive(Debug, Clone)]
pub struct SuperoperatorMatrix {
    pub matrix: Operator,
}

impl SuperoperatorMatrix {
    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        let d = x.nrows();
        let v = nalgebra::DVector::from_column_slice(x.as_slice());
        let out = &self.matrix * v;
        Operator::from_column_slice(d, d, out.as_slice())
    }
}

pub fn build_superoperator(
    topology: &Topology,
    model: &PercolationModel,
    particles: usize,
) -> Result<SuperoperatorMatrix> {
    check_particles(particles)?;
    let d = topology.dim_for(particles);
    if d * d > SUPEROPERATOR_GUARD {
        return Err(Error::Guard(format!(
            "superoperator side {} exceeds {SUPEROPERATOR_GUARD}",
            d * d
        )));
    }
    let mut m = Operator::zeros(d * d, d * d);
    for k in enumerate_configs(topology)? {
        let p = config_probability(model, &k)?;
        let u = StepUnitary::new(topology, &k)?.to_dense();
        let v = if particles == 2 { kron(&u, &u) } else { u };
        // vec(V X V†) = (conj(V) ⊗ V) vec(X)
        m += kron(&v.map(|z| z.conj()), &v) * Complex64::from(p);
    }
    Ok(SuperoperatorMatrix { matrix: m })
}
