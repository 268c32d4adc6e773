//! Mixtures of GW barycenters with a doubly stochastic graph-to-component
//! assignment.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::barycenter::{
    divide_by_measure, estimate_barycenter_measure_weighted, estimate_gwb, fit_with, normalized, random_initial_values,
    select_partition_count,
};
use crate::error::{Error, Result};
use crate::gw::{entropic_ot, proximal_gw};
use crate::model::step::symmetrize_clamp;
use crate::model::{ObservedGraph, SolverConfig, StepFunction, TransportPlan};
use crate::sampling::derive_seed;

/// Sweeps used by the log-domain Sinkhorn solve for the assignment matrix.
const ASSIGNMENT_ITERS: usize = 2000;

/// `C` barycenters and the `C x M` joint assignment probabilities.
#[derive(Clone, Debug)]
pub struct MixtureModel {
    pub components: Vec<StepFunction>,
    pub assignment: TransportPlan,
}

impl MixtureModel {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// `sum_{c,m} p_cm d_gw^2(A_m, W_c)` for a given distance matrix.
    pub fn objective(&self, distances: &Array2<f64>) -> f64 {
        (self.assignment.coupling() * distances).sum()
    }
}

/// Squared GW distances between every component and every graph.
pub fn distance_matrix(
    components: &[StepFunction],
    graphs: &[ObservedGraph],
    cfg: &SolverConfig,
) -> Result<Array2<f64>> {
    let rows = components
        .par_iter()
        .map(|w| {
            graphs
                .iter()
                .map(|g| proximal_gw(g, w, cfg).map(|r| r.distance_sq))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let m = graphs.len();
    Ok(Array2::from_shape_fn((components.len(), m), |(c, j)| rows[c][j]))
}

fn update_assignment(distances: &Array2<f64>, cfg: &SolverConfig) -> Result<TransportPlan> {
    let (c, m) = distances.dim();
    let rows = Array1::from_elem(c, 1.0 / c as f64);
    let cols = Array1::from_elem(m, 1.0 / m as f64);
    entropic_ot(distances.view(), &rows, &cols, cfg.beta, ASSIGNMENT_ITERS)
}

/// Seeded shuffle followed by a round-robin split into `c` shards.
fn shards(m: usize, c: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::new(); c];
    for (i, idx) in order.into_iter().enumerate() {
        out[i % c].push(idx);
    }
    out
}

/// Learns `c` graphons and a soft assignment of `graphs` to them.
///
/// Components start from GW barycenters of disjoint seeded shards. Each round
/// refits every component with the assignment column as graph weights, then
/// recomputes the GW distances and the entropic assignment.
pub fn estimate_mixture(graphs: &[ObservedGraph], c: usize, cfg: &SolverConfig, rounds: usize) -> Result<MixtureModel> {
    cfg.validate()?;
    let m = graphs.len();
    if c == 0 {
        return Err(Error::domain("component count must be positive"));
    }
    if rounds == 0 {
        return Err(Error::domain("round count must be positive"));
    }
    if c > m {
        return Err(Error::domain(format!("{c} components requested for {m} graphs")));
    }
    let uniform_row = |c: usize| Array1::from_elem(c, 1.0 / c as f64);
    let uniform_col = Array1::from_elem(m, 1.0 / m as f64);
    if c == 1 {
        let step = estimate_gwb(graphs, cfg, None)?;
        let assignment = TransportPlan::product(&uniform_row(1), &uniform_col);
        return Ok(MixtureModel {
            components: vec![step],
            assignment,
        });
    }

    let k = select_partition_count(&graphs.iter().map(ObservedGraph::node_count).collect::<Vec<_>>())?;
    let mut components = shards(m, c, derive_seed(cfg.seed, 0))
        .into_iter()
        .enumerate()
        .map(|(i, shard)| {
            let subset: Vec<ObservedGraph> = shard.iter().map(|&j| graphs[j].clone()).collect();
            estimate_gwb(
                &subset,
                &cfg.clone().with_seed(derive_seed(cfg.seed, 1 + i as u64)),
                Some(k),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut assignment = TransportPlan::product(&uniform_row(c), &uniform_col);

    for _ in 0..rounds {
        components = components
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let weights: Vec<f64> = assignment.coupling().row(i).to_vec();
                refit_component(graphs, &weights, w, k, cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let distances = distance_matrix(&components, graphs, cfg)?;
        assignment = update_assignment(&distances, cfg)?;
    }
    Ok(MixtureModel { components, assignment })
}

fn refit_component(
    graphs: &[ObservedGraph],
    weights: &[f64],
    current: &StepFunction,
    k: usize,
    cfg: &SolverConfig,
) -> Result<StepFunction> {
    let mu_w = normalized(estimate_barycenter_measure_weighted(graphs, weights, k)?);
    let initial = if current.k() == k {
        current.values().clone()
    } else {
        random_initial_values(k, cfg.seed)
    };
    let fit = fit_with(graphs, weights, &mu_w, initial, cfg, |b, mu| {
        Ok(symmetrize_clamp(divide_by_measure(b, mu)?))
    })?;
    Ok(fit.step)
}

/// Most probable component of every graph, lowest index on ties.
pub fn assign_clusters(model: &MixtureModel) -> Vec<usize> {
    let p = model.assignment.coupling();
    p.columns()
        .into_iter()
        .map(|col| {
            let mut best = 0;
            for (i, &v) in col.iter().enumerate() {
                if v > col[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
