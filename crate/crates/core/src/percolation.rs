//! Edge configurations, their probabilities and seeded sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Topology;

/// Largest edge count accepted by [`enumerate_configs`].
pub const ENUMERATION_GUARD: usize = 24;

/// Present edges of one time step as a bitset over the topology's edge indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeConfig {
    mask: u64,
    n_edges: usize,
}

impl EdgeConfig {
    pub fn empty(topology: &Topology) -> Self {
        EdgeConfig { mask: 0, n_edges: topology.num_edges() }
    }

    pub fn full(topology: &Topology) -> Self {
        let n = topology.num_edges();
        EdgeConfig { mask: low_bits(n), n_edges: n }
    }

    pub fn from_mask(topology: &Topology, mask: u64) -> Result<Self> {
        let n = topology.num_edges();
        if mask & !low_bits(n) != 0 {
            let index = 63 - mask.leading_zeros() as usize;
            return Err(Error::InvalidEdge { index, edges: n });
        }
        Ok(EdgeConfig { mask, n_edges: n })
    }

    pub fn from_edges(topology: &Topology, edges: &[usize]) -> Result<Self> {
        let n = topology.num_edges();
        let mut mask = 0u64;
        for &e in edges {
            if e >= n {
                return Err(Error::InvalidEdge { index: e, edges: n });
            }
            mask |= 1 << e;
        }
        Ok(EdgeConfig { mask, n_edges: n })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn contains(&self, edge: usize) -> bool {
        edge < self.n_edges && self.mask >> edge & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn present_edges(&self) -> Vec<usize> {
        (0..self.n_edges).filter(|&e| self.contains(e)).collect()
    }

    /// Rejects configurations built for a different edge set.
    pub fn check(&self, topology: &Topology) -> Result<()> {
        let n = topology.num_edges();
        if self.n_edges != n {
            let index = if self.mask == 0 { self.n_edges.saturating_sub(1) } else { 63 - self.mask.leading_zeros() as usize };
            return Err(Error::InvalidEdge { index, edges: n });
        }
        Ok(())
    }
}

fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// All 2^|E| configurations in ascending bitset order.
pub fn enumerate_configs(topology: &Topology) -> Result<Vec<EdgeConfig>> {
    let n = topology.num_edges();
    if n > ENUMERATION_GUARD {
        return Err(Error::Guard(format!(
            "{n} edges exceeds the enumeration limit of {ENUMERATION_GUARD}"
        )));
    }
    Ok((0..1u64 << n).map(|mask| EdgeConfig { mask, n_edges: n }).collect())
}

/// Per-edge break probabilities, each strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationModel {
    break_probabilities: Vec<f64>,
}

impl PercolationModel {
    pub fn new(topology: &Topology, break_probabilities: Vec<f64>) -> Result<Self> {
        let expected = topology.num_edges();
        if break_probabilities.len() != expected {
            return Err(Error::EdgeCountMismatch { expected, got: break_probabilities.len() });
        }
        if let Some(&p) = break_probabilities.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(PercolationModel { break_probabilities })
    }

    pub fn uniform(topology: &Topology, p: f64) -> Result<Self> {
        Self::new(topology, vec![p; topology.num_edges()])
    }

    pub fn break_probabilities(&self) -> &[f64] {
        &self.break_probabilities
    }

    pub fn num_edges(&self) -> usize {
        self.break_probabilities.len()
    }
}

/// p_K: product of (1 - p_e) over present edges and p_e over absent ones.
pub fn config_probability(model: &PercolationModel, config: &EdgeConfig) -> Result<f64> {
    if config.n_edges() != model.num_edges() {
        return Err(Error::EdgeCountMismatch { expected: model.num_edges(), got: config.n_edges() });
    }
    Ok(model
        .break_probabilities
        .iter()
        .enumerate()
        .map(|(e, &p)| if config.contains(e) { 1.0 - p } else { p })
        .product())
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive combination of two 64-bit words.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(29) ^ 0x6A09_E667_F3BC_C909)
}

/// Seed for one trajectory of a Monte-Carlo run.
pub fn trajectory_seed(master_seed: u64, trajectory_id: u64) -> u64 {
    mix_seed(master_seed, trajectory_id)
}

/// Independent Bernoulli draw per edge, fully determined by `(seed, step_index)`.
pub fn sample_config(model: &PercolationModel, seed: u64, step_index: u64) -> EdgeConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, step_index));
    let mut mask = 0u64;
    for (e, &p) in model.break_probabilities.iter().enumerate() {
        if !rng.gen_bool(p) {
            mask |= 1 << e;
        }
    }
    EdgeConfig { mask, n_edges: model.num_edges() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn config_counts() {
        assert_eq!(enumerate_configs(&Topology::line(3).unwrap()).unwrap().len(), 4);
        assert_eq!(enumerate_configs(&Topology::circle(4).unwrap()).unwrap().len(), 16);
        let t = Topology::line(2).unwrap();
        let all = enumerate_configs(&t).unwrap();
        assert_eq!(all, vec![EdgeConfig::empty(&t), EdgeConfig::from_edges(&t, &[0]).unwrap()]);
    }

    #[test]
    fn enumeration_guard() {
        let t = Topology::line(26).unwrap();
        assert!(matches!(enumerate_configs(&t), Err(Error::Guard(_))));
    }

    #[test]
    fn probabilities() {
        let t = Topology::line(3).unwrap();
        let m = PercolationModel::uniform(&t, 0.5).unwrap();
        for k in enumerate_configs(&t).unwrap() {
            assert_eq!(config_probability(&m, &k).unwrap(), 0.25);
        }
        let m = PercolationModel::new(&t, vec![0.3, 0.6]).unwrap();
        let k = EdgeConfig::from_edges(&t, &[0]).unwrap();
        assert!((config_probability(&m, &k).unwrap() - 0.42).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        let t = Topology::line(3).unwrap();
        assert!(matches!(PercolationModel::new(&t, vec![0.5]), Err(Error::EdgeCountMismatch { .. })));
        assert!(matches!(PercolationModel::uniform(&t, 0.0), Err(Error::InvalidProbability(_))));
        assert!(matches!(PercolationModel::uniform(&t, 1.0), Err(Error::InvalidProbability(_))));
        assert!(PercolationModel::uniform(&t, f64::NAN).is_err());
        let m = PercolationModel::uniform(&t, 0.5).unwrap();
        let other = EdgeConfig::empty(&Topology::circle(3).unwrap());
        assert!(config_probability(&m, &other).is_err());
    }

    #[test]
    fn masks_out_of_range() {
        let t = Topology::line(3).unwrap();
        assert!(matches!(EdgeConfig::from_mask(&t, 0b100), Err(Error::InvalidEdge { index: 2, edges: 2 })));
        assert!(EdgeConfig::from_edges(&t, &[5]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let t = Topology::circle(7).unwrap();
        let m = PercolationModel::uniform(&t, 0.5).unwrap();
        for step in 0..20 {
            assert_eq!(sample_config(&m, 99, step), sample_config(&m, 99, step));
        }
        let a: Vec<_> = (0..64).map(|s| sample_config(&m, 1, s).mask()).collect();
        let b: Vec<_> = (0..64).map(|s| sample_config(&m, 2, s).mask()).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn low_break_probability_keeps_edges() {
        let t = Topology::line(4).unwrap();
        let m = PercolationModel::uniform(&t, 0.01).unwrap();
        let draws = 10_000;
        let mut present = vec![0usize; 3];
        for step in 0..draws {
            let k = sample_config(&m, 5, step);
            for (e, c) in present.iter_mut().enumerate() {
                *c += k.contains(e) as usize;
            }
        }
        for c in present {
            assert!(c as f64 >= 0.97 * draws as f64);
        }
    }

    #[test]
    fn empirical_frequencies_match() {
        let t = Topology::line(3).unwrap();
        let m = PercolationModel::uniform(&t, 0.5).unwrap();
        let draws = 100_000u64;
        let mut counts = [0u64; 4];
        for step in 0..draws {
            counts[sample_config(&m, 2024, step).mask() as usize] += 1;
        }
        let mut chi2 = 0.0;
        for (mask, &c) in counts.iter().enumerate() {
            let p = config_probability(&m, &EdgeConfig::from_mask(&t, mask as u64).unwrap()).unwrap();
            let expected = p * draws as f64;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((c as f64 - expected).abs() < 3.0 * sigma, "mask {mask}: {c} vs {expected}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 3 degrees of freedom, 0.1% upper tail
        assert!(chi2 < 16.27, "chi2 {chi2}");
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(n in 2usize..7, circle in any::<bool>(), seed in any::<u64>()) {
            let t = if circle { Topology::circle(n).unwrap() } else { Topology::line(n).unwrap() };
            let ps: Vec<f64> = (0..t.num_edges())
                .map(|e| 0.01 + 0.98 * (splitmix64(seed ^ e as u64) as f64 / u64::MAX as f64))
                .collect();
            let m = PercolationModel::new(&t, ps).unwrap();
            let total: f64 = enumerate_configs(&t).unwrap().iter()
                .map(|k| config_probability(&m, k).unwrap())
                .inspect(|p| assert!(*p >= 0.0))
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-14);
        }
    }
}
