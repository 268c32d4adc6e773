//! Error metrics and baseline estimators.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::gw::solve_proximal_gw;
use crate::model::{discretize_graphon, GraphonSpec, ObservedGraph, SolverConfig, StepFunction};

pub const DEFAULT_RESOLUTION: usize = 1000;

/// Threshold constant for singular value truncation.
pub const USVT_CONSTANT: f64 = 2.02;

/// Piecewise-constant expansion onto an `r x r` pixel grid; pixel `i`
/// belongs to part `floor(i K / r)`.
pub fn upsample_step_function(w: &StepFunction, r: usize) -> Result<Array2<f64>> {
    let k = w.k();
    if r < k {
        return Err(Error::domain(format!(
            "resolution {r} is below the partition count {k}"
        )));
    }
    let part: Vec<usize> = (0..r).map(|i| i * k / r).collect();
    let values = w.values();
    Ok(Array2::from_shape_fn((r, r), |(i, j)| values[[part[i], part[j]]]))
}

/// Mean squared pixel error against the discretized ground truth.
pub fn mse_error(estimate: &StepFunction, truth: &GraphonSpec, r: usize) -> Result<f64> {
    let up = upsample_step_function(estimate, r)?;
    let gt = discretize_graphon(truth, r)?;
    let sum: f64 = up.iter().zip(gt.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / (r * r) as f64)
}

/// Alignment-free error: the GW distance (not squared) between the estimate
/// and the truth discretized at resolution `r` with uniform measure.
pub fn gw_error(estimate: &StepFunction, truth: &GraphonSpec, cfg: &SolverConfig, r: usize) -> Result<f64> {
    let gt = discretize_graphon(truth, r)?;
    let uniform = Array1::from_elem(r, 1.0 / r as f64);
    let res = solve_proximal_gw(&gt, &uniform, estimate.values(), estimate.measure(), cfg, None)?;
    Ok(res.distance_sq.sqrt())
}

fn padded_average(graphs: &[ObservedGraph]) -> Result<Array2<f64>> {
    let n_max = graphs
        .iter()
        .map(ObservedGraph::node_count)
        .max()
        .ok_or_else(|| Error::domain("at least one graph is required"))?;
    let mut avg = Array2::<f64>::zeros((n_max, n_max));
    let share = 1.0 / graphs.len() as f64;
    for g in graphs {
        for (u, v) in g.edges() {
            avg[[u, v]] += share;
            avg[[v, u]] += share;
        }
    }
    Ok(avg)
}

/// Zero-padded average adjacency with no alignment.
pub fn naive_average_estimate(graphs: &[ObservedGraph]) -> Result<StepFunction> {
    StepFunction::uniform(padded_average(graphs)?)
}

/// Universal singular value thresholding of the zero-padded average
/// adjacency.
pub fn usvt_estimate(graphs: &[ObservedGraph]) -> Result<StepFunction> {
    let avg = padded_average(graphs)?;
    let n = avg.nrows();
    let threshold = USVT_CONSTANT * (n as f64 / graphs.len() as f64).sqrt();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| avg[[i, j]]));
    let mut out = Array2::<f64>::zeros((n, n));
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        // Singular values of a symmetric matrix are the eigenvalue magnitudes.
        if lambda.abs() < threshold {
            continue;
        }
        let v = eig.eigenvectors.column(idx);
        for i in 0..n {
            let vi = lambda * v[i];
            for j in 0..n {
                out[[i, j]] += vi * v[j];
            }
        }
    }
    StepFunction::uniform(out)
}

/// Fraction of items whose predicted label maps to the true label under the
/// best one-to-one relabeling.
pub fn clustering_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::dims(truth.len(), predicted.len()));
    }
    if truth.is_empty() {
        return Err(Error::domain("no labels"));
    }
    let n = 1 + predicted.iter().chain(truth).copied().max().unwrap_or(0);
    let mut agree = vec![vec![0.0; n]; n];
    for (&p, &t) in predicted.iter().zip(truth) {
        agree[p][t] += 1.0;
    }
    let cost: Vec<Vec<f64>> = agree.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
    let matched: f64 = hungarian(&cost).iter().enumerate().map(|(p, &t)| agree[p][t]).sum();
    Ok(matched / truth.len() as f64)
}

/// Minimum-cost perfect assignment on a square cost matrix; returns the
/// column assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}
