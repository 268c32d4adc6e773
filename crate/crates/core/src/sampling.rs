//! Random graphs from a graphon: latent positions uniform on `[0, 1]`, then
//! independent Bernoulli edges with probability `W(v_i, v_j)`.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{GraphonSpec, ObservedGraph};

/// Degree floor so that isolated nodes keep positive mass.
pub const DEGREE_FLOOR: f64 = 1e-8;

/// Normalized node degrees, with every degree floored at [`DEGREE_FLOOR`].
pub fn estimate_node_measure(degrees: &[usize]) -> Array1<f64> {
    let floored: Array1<f64> = degrees.iter().map(|&d| (d as f64).max(DEGREE_FLOOR)).collect();
    let total = floored.sum();
    floored / total
}

pub fn sample_graph(spec: &GraphonSpec, n: usize, seed: u64) -> Result<ObservedGraph> {
    if n < 2 {
        return Err(Error::domain(format!("graphs need at least 2 nodes, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let p = spec.eval_unchecked(positions[i], positions[j]);
            if rng.random::<f64>() < p {
                neighbors[i].push(j as u32);
                neighbors[j].push(i as u32);
            }
        }
    }
    // Pushes happen in increasing order of the partner index, so lists are sorted.
    Ok(ObservedGraph::from_neighbors(neighbors))
}

/// Stream seed for item `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A graph size and sampling seed for each member of a population.
pub fn population_plan(count: usize, size_range: (usize, usize), seed: u64) -> Result<Vec<(usize, u64)>> {
    let (lo, hi) = size_range;
    if lo < 2 || lo > hi {
        return Err(Error::domain(format!("invalid size range [{lo}, {hi}]")));
    }
    if count == 0 {
        return Err(Error::domain("population must contain at least one graph"));
    }
    Ok((0..count as u64)
        .map(|m| {
            let graph_seed = derive_seed(seed, m);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(graph_seed, u64::MAX));
            (rng.random_range(lo..=hi), graph_seed)
        })
        .collect())
}

pub fn sample_population(
    spec: &GraphonSpec,
    count: usize,
    size_range: (usize, usize),
    seed: u64,
) -> Result<Vec<ObservedGraph>> {
    population_plan(count, size_range, seed)?
        .into_par_iter()
        .map(|(n, s)| sample_graph(spec, n, s))
        .collect()
}
