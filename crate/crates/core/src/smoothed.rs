//! Smoothness-regularized barycenters.
//!
//! Adding `alpha * ||L W L^T||_F^2` to the barycenter objective turns the
//! closed-form update into the matrix equation
//!
//! ```text
//! 2 alpha X W X + D W D = B,   X = L^T L,  D = diag(mu_W)
//! ```
//!
//! where `B` is the weighted transported average of the graphs. Two solvers
//! are offered: a complex factorization `H W H^H` with
//! `H = sqrt(2 alpha) X + i D`, which drops the cross term
//! `i sqrt(2 alpha) (D W X - X W D)`, and a preconditioned conjugate-gradient
//! solve of the exact equation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use ndarray::{Array1, Array2};

use crate::barycenter::{
    divide_by_measure, fit_with, prepare, random_initial_values, transported_average, BarycenterFit,
};
use crate::error::{Error, Result};
use crate::model::step::symmetrize_clamp;
use crate::model::{ObservedGraph, SolverConfig, StepFunction, TransportPlan};

const CG_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SmoothedSolveMode {
    /// Complex factorization; exact when `D` commutes with `X`.
    #[default]
    ClosedForm,
    /// Conjugate gradient on the full equation.
    ExactIterative,
}

impl FromStr for SmoothedSolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" | "closed-form" => Ok(SmoothedSolveMode::ClosedForm),
            "exact" | "iterative" => Ok(SmoothedSolveMode::ExactIterative),
            other => Err(Error::domain(format!(
                "unknown solve mode `{other}` (expected paper or exact)"
            ))),
        }
    }
}

impl fmt::Display for SmoothedSolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmoothedSolveMode::ClosedForm => "paper",
            SmoothedSolveMode::ExactIterative => "exact",
        })
    }
}

/// Second-difference operator with Neumann boundary rows.
pub fn build_laplacian_filter(k: usize) -> Result<Array2<f64>> {
    if k < 2 {
        return Err(Error::domain(format!("Laplacian filter needs k >= 2, got {k}")));
    }
    let mut l = Array2::zeros((k, k));
    for i in 0..k {
        if i > 0 {
            l[[i, i - 1]] = -1.0;
            l[[i, i]] += 1.0;
        }
        if i + 1 < k {
            l[[i, i + 1]] = -1.0;
            l[[i, i]] += 1.0;
        }
    }
    Ok(l)
}

/// `L^T L`; the zero matrix when `k == 1`.
fn curvature_gram(k: usize) -> Result<Array2<f64>> {
    if k == 1 {
        return Ok(Array2::zeros((1, 1)));
    }
    let l = build_laplacian_filter(k)?;
    Ok(l.t().dot(&l))
}

/// `2 alpha X W X + D W D`.
pub fn smoothed_operator(w: &Array2<f64>, mu_w: &Array1<f64>, alpha: f64) -> Result<Array2<f64>> {
    let x = curvature_gram(mu_w.len())?;
    Ok(apply_operator(w, &x, mu_w, alpha))
}

fn apply_operator(w: &Array2<f64>, x: &Array2<f64>, mu: &Array1<f64>, alpha: f64) -> Array2<f64> {
    let mut out = if alpha > 0.0 {
        x.dot(w).dot(x) * (2.0 * alpha)
    } else {
        Array2::zeros(w.dim())
    };
    for ((i, j), v) in out.indexed_iter_mut() {
        *v += mu[i] * w[[i, j]] * mu[j];
    }
    out
}

/// Relative Frobenius residual of `w` as a solution for right-hand side `b`.
pub fn smoothed_residual(w: &Array2<f64>, b: &Array2<f64>, mu_w: &Array1<f64>, alpha: f64) -> Result<f64> {
    let r = smoothed_operator(w, mu_w, alpha)? - b;
    let norm_b = frobenius(b);
    let norm_r = frobenius(&r);
    Ok(if norm_b > 0.0 { norm_r / norm_b } else { norm_r })
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves for the smoothed values before symmetrization and clamping.
pub fn solve_smoothed_raw(
    b: &Array2<f64>,
    mu_w: &Array1<f64>,
    alpha: f64,
    mode: SmoothedSolveMode,
) -> Result<Array2<f64>> {
    let k = mu_w.len();
    if b.dim() != (k, k) {
        return Err(Error::dims(format!("{k}x{k}"), format!("{:?}", b.dim())));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain(format!("alpha must be nonnegative, got {alpha}")));
    }
    if alpha == 0.0 || k == 1 {
        return divide_by_measure(b, mu_w);
    }
    let x = curvature_gram(k)?;
    match mode {
        SmoothedSolveMode::ClosedForm => closed_form(b, &x, mu_w, alpha),
        SmoothedSolveMode::ExactIterative => conjugate_gradient(b, &x, mu_w, alpha),
    }
}

fn closed_form(b: &Array2<f64>, x: &Array2<f64>, mu: &Array1<f64>, alpha: f64) -> Result<Array2<f64>> {
    let k = mu.len();
    let s = (2.0 * alpha).sqrt();
    let h = DMatrix::from_fn(k, k, |i, j| {
        Complex::new(s * x[[i, j]], if i == j { mu[i] } else { 0.0 })
    });
    let h_inv = h
        .try_inverse()
        .ok_or_else(|| Error::Numeric("smoothing factor H is singular".into()))?;
    let bc = DMatrix::from_fn(k, k, |i, j| Complex::new(b[[i, j]], 0.0));
    let w = &h_inv * bc * h_inv.adjoint();
    Ok(Array2::from_shape_fn((k, k), |(i, j)| w[(i, j)].re))
}

fn conjugate_gradient(b: &Array2<f64>, x: &Array2<f64>, mu: &Array1<f64>, alpha: f64) -> Result<Array2<f64>> {
    let k = mu.len();
    let norm_b = frobenius(b);
    if norm_b == 0.0 {
        return Ok(Array2::zeros((k, k)));
    }
    let precond = Array2::from_shape_fn((k, k), |(i, j)| 2.0 * alpha * x[[i, i]] * x[[j, j]] + mu[i] * mu[j]);
    let inner = |a: &Array2<f64>, c: &Array2<f64>| (a * c).sum();

    let mut w = divide_by_measure(b, mu)?;
    let mut r = b - &apply_operator(&w, x, mu, alpha);
    let mut z = &r / &precond;
    let mut p = z.clone();
    let mut rz = inner(&r, &z);
    let max_iters = 10 * k * k;
    for _ in 0..max_iters {
        if frobenius(&r) <= CG_TOL * norm_b {
            return Ok(w);
        }
        let ap = apply_operator(&p, x, mu, alpha);
        let step = rz / inner(&p, &ap);
        w.scaled_add(step, &p);
        r.scaled_add(-step, &ap);
        z = &r / &precond;
        let rz_next = inner(&r, &z);
        p = &z + &(p * (rz_next / rz));
        rz = rz_next;
    }
    if frobenius(&r) <= CG_TOL * norm_b {
        return Ok(w);
    }
    Err(Error::Numeric(format!(
        "conjugate gradient did not converge in {max_iters} iterations"
    )))
}

/// Smoothed barycenter for fixed plans, symmetrized and clamped.
pub fn smoothed_barycenter_update(
    graphs: &[ObservedGraph],
    plans: &[TransportPlan],
    mu_w: &Array1<f64>,
    alpha: f64,
    mode: SmoothedSolveMode,
) -> Result<Array2<f64>> {
    let couplings: Vec<Array2<f64>> = plans.iter().map(|p| p.coupling().clone()).collect();
    let b = transported_average(graphs, &couplings, &vec![1.0; graphs.len()])?;
    Ok(symmetrize_clamp(solve_smoothed_raw(&b, mu_w, alpha, mode)?))
}

pub fn fit_sgwb(
    graphs: &[ObservedGraph],
    cfg: &SolverConfig,
    k: Option<usize>,
    mode: SmoothedSolveMode,
) -> Result<BarycenterFit> {
    let (k, mu_w) = prepare(graphs, k)?;
    let initial = random_initial_values(k, cfg.seed);
    let alpha = cfg.alpha;
    fit_with(graphs, &vec![1.0; graphs.len()], &mu_w, initial, cfg, |b, mu| {
        Ok(symmetrize_clamp(solve_smoothed_raw(b, mu, alpha, mode)?))
    })
}

pub fn estimate_sgwb(
    graphs: &[ObservedGraph],
    cfg: &SolverConfig,
    k: Option<usize>,
    mode: SmoothedSolveMode,
) -> Result<StepFunction> {
    fit_sgwb(graphs, cfg, k, mode).map(|fit| fit.step)
}
