//! The GW barycenter estimator.
//!
//! Given graphs `A_1..A_M`, the estimator alternates between transport plans
//! `T_m` (one proximal GW solve per graph) and the closed-form barycenter
//!
//! ```text
//! W = (sum_m w_m T_m^T A_m T_m) / (mu_W mu_W^T)
//! ```
//!
//! where `mu_W` is fixed up front by merging the sorted degree measures.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gw::{gw_objective, solve_proximal_gw};
use crate::model::step::symmetrize_clamp;
use crate::model::{ObservedGraph, SolverConfig, StepFunction, TransportPlan};

/// `floor(N_max / ln N_max)`, at least 2.
pub fn select_partition_count(sizes: &[usize]) -> Result<usize> {
    let n_max = *sizes
        .iter()
        .max()
        .ok_or_else(|| Error::domain("cannot choose a partition count for an empty population"))?;
    if n_max < 3 {
        return Ok(2);
    }
    let n = n_max as f64;
    Ok(((n / n.ln()).floor() as usize).max(2))
}

/// Samples a descending-sorted vector at `k` evenly spaced abscissae by
/// linear interpolation. Entry `n` of the input sits at `(n + 0.5) / N`;
/// outside the first and last knot the end values are held.
fn interpolate_sorted(sorted: &[f64], k: usize) -> Array1<f64> {
    let n = sorted.len();
    (0..k)
        .map(|j| {
            let x = (j as f64 + 0.5) / k as f64;
            let pos = x * n as f64 - 0.5;
            if pos <= 0.0 {
                sorted[0]
            } else if pos >= (n - 1) as f64 {
                sorted[n - 1]
            } else {
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                if frac == 0.0 {
                    sorted[lo]
                } else {
                    sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
                }
            }
        })
        .collect()
}

fn sorted_descending(measure: &Array1<f64>) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..measure.len()).collect();
    // Stable sort keeps original order among ties.
    idx.sort_by(|&a, &b| measure[b].total_cmp(&measure[a]));
    idx.into_iter().map(|i| measure[i]).collect()
}

/// Barycenter measure from weighted graphs; weights need not be normalized.
pub fn estimate_barycenter_measure_weighted(
    graphs: &[ObservedGraph],
    weights: &[f64],
    k: usize,
) -> Result<Array1<f64>> {
    if graphs.is_empty() {
        return Err(Error::domain("no graphs"));
    }
    if weights.len() != graphs.len() {
        return Err(Error::dims(graphs.len(), weights.len()));
    }
    if k == 0 {
        return Err(Error::domain("partition count must be positive"));
    }
    let mut acc = Array1::<f64>::zeros(k);
    for (g, &w) in graphs.iter().zip(weights) {
        if w > 0.0 {
            acc.scaled_add(w, &interpolate_sorted(&sorted_descending(g.measure()), k));
        }
    }
    let total = acc.sum();
    if !(total > 0.0) {
        return Err(Error::domain("weights must have positive total"));
    }
    Ok(acc / total)
}

pub fn estimate_barycenter_measure(graphs: &[ObservedGraph], k: usize) -> Result<Array1<f64>> {
    estimate_barycenter_measure_weighted(graphs, &vec![1.0; graphs.len()], k)
}

/// `sum_m weight_m T_m^T A_m T_m`, with weights normalized to sum to one.
pub fn transported_average(graphs: &[ObservedGraph], plans: &[Array2<f64>], weights: &[f64]) -> Result<Array2<f64>> {
    if graphs.len() != plans.len() || graphs.len() != weights.len() || graphs.is_empty() {
        return Err(Error::dims(
            graphs.len(),
            format!("{} plans, {} weights", plans.len(), weights.len()),
        ));
    }
    let k = plans[0].ncols();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::domain("weights must have positive total"));
    }
    let mut acc = Array2::<f64>::zeros((k, k));
    for ((g, t), &w) in graphs.iter().zip(plans).zip(weights) {
        if t.dim() != (g.node_count(), k) {
            return Err(Error::dims(format!("{}x{k}", g.node_count()), format!("{:?}", t.dim())));
        }
        if w > 0.0 {
            let tat = t.t().dot(&g.mul_dense(t.view()));
            acc.scaled_add(w / total, &tat);
        }
    }
    Ok(acc)
}

/// Divides `b` elementwise by `mu mu^T`.
pub(crate) fn divide_by_measure(b: &Array2<f64>, mu_w: &Array1<f64>) -> Result<Array2<f64>> {
    if mu_w.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::domain("barycenter measure has non-positive entries"));
    }
    Ok(Array2::from_shape_fn(b.dim(), |(i, j)| b[[i, j]] / (mu_w[i] * mu_w[j])))
}

/// Closed-form barycenter for fixed plans, symmetrized and clamped.
pub fn barycenter_update(graphs: &[ObservedGraph], plans: &[TransportPlan], mu_w: &Array1<f64>) -> Result<Array2<f64>> {
    let couplings: Vec<Array2<f64>> = plans.iter().map(|p| p.coupling().clone()).collect();
    let b = transported_average(graphs, &couplings, &vec![1.0; graphs.len()])?;
    if b.nrows() != mu_w.len() {
        return Err(Error::dims(b.nrows(), mu_w.len()));
    }
    Ok(symmetrize_clamp(divide_by_measure(&b, mu_w)?))
}

/// Symmetrized uniform noise on `[0, 1]`.
pub fn random_initial_values(k: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Array2::from_shape_fn((k, k), |_| rng.random::<f64>());
    symmetrize_clamp(raw)
}

/// Output of a barycenter fit with per-graph plans and objective traces.
#[derive(Clone, Debug)]
pub struct BarycenterFit {
    pub step: StepFunction,
    pub plans: Vec<TransportPlan>,
    /// Weighted GW objective at the product plans and the initial values.
    pub initial_objective: f64,
    /// Weighted GW objective at the final plans and final values.
    pub final_objective: f64,
}

/// Alternating plan / barycenter updates shared by every estimator variant.
///
/// `update` maps the weighted transported average `B` and `mu_w` to the next
/// value matrix.
pub(crate) fn fit_with<F>(
    graphs: &[ObservedGraph],
    weights: &[f64],
    mu_w: &Array1<f64>,
    initial: Array2<f64>,
    cfg: &SolverConfig,
    update: F,
) -> Result<BarycenterFit>
where
    F: Fn(&Array2<f64>, &Array1<f64>) -> Result<Array2<f64>>,
{
    cfg.validate()?;
    let k = mu_w.len();
    let total: f64 = weights.iter().sum();
    let active: Vec<bool> = weights.iter().map(|&w| w > total * 1e-12).collect();
    let objective = |values: &Array2<f64>, plans: &[Array2<f64>]| -> Result<f64> {
        graphs
            .par_iter()
            .zip(plans.par_iter())
            .zip(weights.par_iter())
            .map(|((g, t), &w)| Ok(w / total * gw_objective(g, g.measure(), values, mu_w, t.view())?))
            .collect::<Result<Vec<f64>>>()
            .map(|v| v.iter().sum())
    };
    let product: Vec<Array2<f64>> = graphs
        .iter()
        .map(|g| TransportPlan::product(g.measure(), mu_w).into_coupling())
        .collect();
    let initial_objective = objective(&initial, &product)?;
    let mut values = initial;
    let mut plans = product.clone();
    for _ in 0..cfg.outer_iters {
        plans = graphs
            .par_iter()
            .enumerate()
            .map(|(m, g)| {
                if !active[m] {
                    return Ok(product[m].clone());
                }
                let init = if cfg.warm_start { Some(&plans[m]) } else { None };
                let res = solve_proximal_gw(g, g.measure(), &values, mu_w, cfg, init)?;
                Ok(res.plan.into_coupling())
            })
            .collect::<Result<Vec<_>>>()?;
        let b = transported_average(graphs, &plans, weights)?;
        values = update(&b, mu_w)?;
        debug_assert_eq!(values.dim(), (k, k));
    }
    let final_objective = objective(&values, &plans)?;
    let step = StepFunction::new(values, mu_w.clone())?;
    let plans = graphs
        .iter()
        .zip(plans)
        .map(|(g, t)| TransportPlan::new_unchecked(t, g.measure().clone(), mu_w.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(BarycenterFit {
        step,
        plans,
        initial_objective,
        final_objective,
    })
}

/// Partition count and barycenter measure for a population.
pub(crate) fn prepare(graphs: &[ObservedGraph], k: Option<usize>) -> Result<(usize, Array1<f64>)> {
    if graphs.is_empty() {
        return Err(Error::domain("at least one graph is required"));
    }
    let k = match k {
        Some(k) if k >= 1 => k,
        Some(_) => return Err(Error::domain("partition count must be positive")),
        None => select_partition_count(&graphs.iter().map(ObservedGraph::node_count).collect::<Vec<_>>())?,
    };
    // Renormalize so the measure sums to one to within a few ulps.
    let mu = estimate_barycenter_measure(graphs, k)?;
    Ok((k, normalized(mu)))
}

pub(crate) fn normalized(mu: Array1<f64>) -> Array1<f64> {
    let total = mu.sum();
    mu / total
}

/// Runs the full estimator and returns plans and objective values as well.
pub fn fit_gwb(graphs: &[ObservedGraph], cfg: &SolverConfig, k: Option<usize>) -> Result<BarycenterFit> {
    let (k, mu_w) = prepare(graphs, k)?;
    let initial = random_initial_values(k, cfg.seed);
    fit_with(graphs, &vec![1.0; graphs.len()], &mu_w, initial, cfg, |b, mu| {
        Ok(symmetrize_clamp(divide_by_measure(b, mu)?))
    })
}

/// GW barycenter step function of `graphs`.
pub fn estimate_gwb(graphs: &[ObservedGraph], cfg: &SolverConfig, k: Option<usize>) -> Result<StepFunction> {
    fit_gwb(graphs, cfg, k).map(|fit| fit.step)
}
