use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};
use crate::model::TransportPlan;

/// Smallest kernel entry kept after exponentiation.
pub const KERNEL_FLOOR: f64 = 1e-300;

/// Alternating Sinkhorn scalings of a positive kernel towards the marginals
/// `(mu_row, mu_col)`.
///
/// Each sweep updates the column scaling first, then the row scaling, so the
/// row marginal is exact after every sweep. Iteration stops after
/// `inner_iters` sweeps or once the column residual is at most `tol`.
pub fn sinkhorn_projection(
    kernel: ArrayView2<f64>,
    mu_row: &Array1<f64>,
    mu_col: &Array1<f64>,
    inner_iters: usize,
    tol: f64,
) -> Result<TransportPlan> {
    let (n, k) = kernel.dim();
    if mu_row.len() != n || mu_col.len() != k {
        return Err(Error::dims(
            format!("{n}x{k} marginals"),
            format!("{}x{}", mu_row.len(), mu_col.len()),
        ));
    }
    if kernel.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite kernel entry".into()));
    }
    let mut a = mu_row.clone();
    let mut b = Array1::<f64>::ones(k);
    let mut sweeps = 0;
    loop {
        let kt_a = kernel.t().dot(&a);
        if sweeps > 0 {
            let col_res = Zip::from(&b)
                .and(&kt_a)
                .and(mu_col)
                .fold(0.0f64, |acc, &bj, &s, &m| acc.max((bj * s - m).abs()));
            if col_res <= tol || sweeps >= inner_iters {
                break;
            }
        }
        b = mu_col / &kt_a;
        let k_b = kernel.dot(&b);
        a = mu_row / &k_b;
        sweeps += 1;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("Sinkhorn scaling diverged".into()));
        }
    }
    let mut plan = kernel.to_owned();
    Zip::indexed(&mut plan).for_each(|(i, j), v| *v *= a[i] * b[j]);
    TransportPlan::new_unchecked(plan, mu_row.clone(), mu_col.clone())
}

/// Moves an approximately feasible nonnegative coupling onto the transport
/// polytope: scale down overfull rows and columns, then distribute the
/// remaining deficit as a rank-one correction.
pub fn round_to_marginals(mut plan: Array2<f64>, mu_row: &Array1<f64>, mu_col: &Array1<f64>) -> Array2<f64> {
    let rows = plan.sum_axis(Axis(1));
    for (mut row, (&s, &r)) in plan.axis_iter_mut(Axis(0)).zip(rows.iter().zip(mu_row)) {
        if s > r {
            row *= r / s;
        }
    }
    let cols = plan.sum_axis(Axis(0));
    for (mut col, (&s, &c)) in plan.axis_iter_mut(Axis(1)).zip(cols.iter().zip(mu_col)) {
        if s > c {
            col *= c / s;
        }
    }
    let err_r: Array1<f64> = (mu_row - &plan.sum_axis(Axis(1))).mapv(|v| v.max(0.0));
    let err_c: Array1<f64> = (mu_col - &plan.sum_axis(Axis(0))).mapv(|v| v.max(0.0));
    let mass = err_r.sum();
    if mass > 0.0 {
        Zip::indexed(&mut plan).for_each(|(i, j), v| *v += err_r[i] * err_c[j] / mass);
    }
    plan
}

/// Entropy-regularized transport with cost `cost` and weight `beta`, solved
/// by log-domain Sinkhorn and rounded onto the marginals.
pub fn entropic_ot(
    cost: ArrayView2<f64>,
    mu_row: &Array1<f64>,
    mu_col: &Array1<f64>,
    beta: f64,
    iters: usize,
) -> Result<TransportPlan> {
    if !(beta > 0.0) {
        return Err(Error::domain(format!("entropic weight must be positive, got {beta}")));
    }
    let (n, m) = cost.dim();
    if mu_row.len() != n || mu_col.len() != m {
        return Err(Error::dims(
            format!("{n}x{m} marginals"),
            format!("{}x{}", mu_row.len(), mu_col.len()),
        ));
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite cost entry".into()));
    }
    if mu_row.iter().chain(mu_col).any(|&v| !(v > 0.0)) {
        return Err(Error::domain("marginals must be strictly positive"));
    }
    let log_r = mu_row.mapv(f64::ln);
    let log_c = mu_col.mapv(f64::ln);
    let scaled = cost.mapv(|c| -c / beta);
    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(m);
    for _ in 0..iters.max(1) {
        for j in 0..m {
            g[j] = log_c[j] - log_sum_exp((0..n).map(|i| scaled[[i, j]] + f[i]));
        }
        for i in 0..n {
            f[i] = log_r[i] - log_sum_exp((0..m).map(|j| scaled[[i, j]] + g[j]));
        }
        let col_res = (0..m)
            .map(|j| {
                let s: f64 = (0..n).map(|i| (scaled[[i, j]] + f[i] + g[j]).exp()).sum();
                (s - mu_col[j]).abs()
            })
            .fold(0.0, f64::max);
        if col_res <= 1e-13 {
            break;
        }
    }
    let plan = Array2::from_shape_fn((n, m), |(i, j)| (scaled[[i, j]] + f[i] + g[j]).exp());
    let plan = round_to_marginals(plan, mu_row, mu_col);
    TransportPlan::new_unchecked(plan, mu_row.clone(), mu_col.clone())
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}
