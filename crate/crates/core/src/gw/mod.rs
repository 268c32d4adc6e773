//! Gromov-Wasserstein machinery between a graph (or any symmetric relation
//! matrix) and a step function.
//!
//! For relation matrices `A` (`N x N`, measure `mu_a`) and `W` (`K x K`,
//! measure `mu_w`) and a coupling `T`, the squared 2-order GW objective is
//!
//! ```text
//! <D - 2 A T W^T, T>,   D = (A.A) mu_a 1_K^T + 1_N mu_w^T (W.W)
//! ```
//!
//! [`solve_proximal_gw`] minimizes it with Bregman proximal point steps: each
//! step fixes one factor of the quadratic at the previous plan, adds a KL
//! penalty towards that plan, and solves the result with Sinkhorn scaling.

pub mod exact;
mod sinkhorn;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::error::{Error, Result};
use crate::model::{ObservedGraph, SolverConfig, StepFunction, TransportPlan};

pub use sinkhorn::{entropic_ot, round_to_marginals, sinkhorn_projection, KERNEL_FLOOR};

/// A symmetric relation matrix that can be multiplied against dense plans.
pub trait Relation: Sync {
    fn size(&self) -> usize;

    /// `self * t` for an `N x K` matrix `t`.
    fn mul_dense(&self, t: ArrayView2<f64>) -> Array2<f64>;

    /// `(self . self) * mu`, the Hadamard square applied to a vector.
    fn squared_mul_vec(&self, mu: &Array1<f64>) -> Array1<f64>;
}

impl Relation for ObservedGraph {
    fn size(&self) -> usize {
        self.node_count()
    }

    fn mul_dense(&self, t: ArrayView2<f64>) -> Array2<f64> {
        ObservedGraph::mul_dense(self, t)
    }

    fn squared_mul_vec(&self, mu: &Array1<f64>) -> Array1<f64> {
        // Binary entries are their own squares.
        (0..self.node_count())
            .map(|i| self.neighbors(i).iter().map(|&j| mu[j as usize]).sum())
            .collect()
    }
}

impl Relation for Array2<f64> {
    fn size(&self) -> usize {
        self.nrows()
    }

    fn mul_dense(&self, t: ArrayView2<f64>) -> Array2<f64> {
        self.dot(&t)
    }

    fn squared_mul_vec(&self, mu: &Array1<f64>) -> Array1<f64> {
        self.mapv(|v| v * v).dot(mu)
    }
}

#[derive(Clone, Debug)]
pub struct GwResult {
    pub plan: TransportPlan,
    /// GW objective at `plan`, floored at zero.
    pub distance_sq: f64,
}

fn check_shapes<R: Relation + ?Sized>(a: &R, mu_a: &Array1<f64>, w: &Array2<f64>, mu_w: &Array1<f64>) -> Result<()> {
    let n = a.size();
    if mu_a.len() != n {
        return Err(Error::dims(format!("measure of length {n}"), mu_a.len()));
    }
    let (k, k2) = w.dim();
    if k != k2 {
        return Err(Error::dims("square matrix", format!("{k}x{k2}")));
    }
    if mu_w.len() != k {
        return Err(Error::dims(format!("measure of length {k}"), mu_w.len()));
    }
    Ok(())
}

/// The constant part `D` of the GW objective.
pub fn gw_cost_offset<R: Relation + ?Sized>(
    a: &R,
    mu_a: &Array1<f64>,
    w: &Array2<f64>,
    mu_w: &Array1<f64>,
) -> Result<Array2<f64>> {
    check_shapes(a, mu_a, w, mu_w)?;
    Ok(cost_offset(a, mu_a, w, mu_w))
}

fn cost_offset<R: Relation + ?Sized>(a: &R, mu_a: &Array1<f64>, w: &Array2<f64>, mu_w: &Array1<f64>) -> Array2<f64> {
    let row = a.squared_mul_vec(mu_a);
    let col = w.mapv(|v| v * v).t().dot(mu_w);
    Array2::from_shape_fn((row.len(), col.len()), |(i, k)| row[i] + col[k])
}

/// `D - 2 A T W^T`, the linearized cost at plan `t`.
fn linear_cost<R: Relation + ?Sized>(a: &R, offset: &Array2<f64>, t: ArrayView2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let at_w = a.mul_dense(t).dot(&w.t());
    offset - &(at_w * 2.0)
}

/// The GW objective `<D - 2 A T W^T, T>` at an arbitrary coupling.
pub fn gw_objective<R: Relation + ?Sized>(
    a: &R,
    mu_a: &Array1<f64>,
    w: &Array2<f64>,
    mu_w: &Array1<f64>,
    t: ArrayView2<f64>,
) -> Result<f64> {
    check_shapes(a, mu_a, w, mu_w)?;
    if t.dim() != (a.size(), w.nrows()) {
        return Err(Error::dims(
            format!("{}x{} plan", a.size(), w.nrows()),
            format!("{:?}", t.dim()),
        ));
    }
    let offset = cost_offset(a, mu_a, w, mu_w);
    Ok((linear_cost(a, &offset, t, w) * t).sum())
}

/// Proximal point GW solve between `a` and `w`, starting from `init` or the
/// product coupling.
pub fn solve_proximal_gw<R: Relation + ?Sized>(
    a: &R,
    mu_a: &Array1<f64>,
    w: &Array2<f64>,
    mu_w: &Array1<f64>,
    cfg: &SolverConfig,
    init: Option<&Array2<f64>>,
) -> Result<GwResult> {
    cfg.validate()?;
    check_shapes(a, mu_a, w, mu_w)?;
    if mu_a.iter().chain(mu_w).any(|&v| !(v > 0.0)) {
        return Err(Error::domain("measures must be strictly positive"));
    }
    let offset = cost_offset(a, mu_a, w, mu_w);
    let mut plan = match init {
        Some(t) if t.dim() == (a.size(), w.nrows()) => t.clone(),
        Some(t) => {
            return Err(Error::dims(
                format!("{}x{} plan", a.size(), w.nrows()),
                format!("{:?}", t.dim()),
            ))
        }
        None => TransportPlan::product(mu_a, mu_w).into_coupling(),
    };
    let inv_beta = 1.0 / cfg.beta;
    for _ in 0..cfg.sinkhorn_iters {
        let mut kernel = linear_cost(a, &offset, plan.view(), w);
        // Row shifts are absorbed by the row scaling.
        for (mut row, prev) in kernel.axis_iter_mut(Axis(0)).zip(plan.axis_iter(Axis(0))) {
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            Zip::from(&mut row).and(&prev).for_each(|c, &p| {
                *c = ((-(*c - min) * inv_beta).exp() * p).max(KERNEL_FLOOR);
            });
        }
        let projected = sinkhorn_projection(kernel.view(), mu_a, mu_w, cfg.inner_iters, cfg.marginal_tol)?;
        // Keep every proximal iterate inside the transport polytope.
        plan = round_to_marginals(projected.into_coupling(), mu_a, mu_w);
    }
    let objective = (linear_cost(a, &offset, plan.view(), w) * &plan).sum();
    if !objective.is_finite() {
        return Err(Error::Numeric("GW objective is not finite".into()));
    }
    Ok(GwResult {
        plan: TransportPlan::new_unchecked(plan, mu_a.clone(), mu_w.clone())?,
        distance_sq: objective.max(0.0),
    })
}

/// Proximal GW between an observed graph and a step function.
pub fn proximal_gw(graph: &ObservedGraph, w: &StepFunction, cfg: &SolverConfig) -> Result<GwResult> {
    solve_proximal_gw(graph, graph.measure(), w.values(), w.measure(), cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MARGINAL_TOL;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = rng.random::<f64>();
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        m
    }

    fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
        let v: Array1<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let s = v.sum();
        v / s
    }

    /// Direct quadruple sum of squared discrepancies.
    fn brute_objective(a: &Array2<f64>, b: &Array2<f64>, t: &Array2<f64>) -> f64 {
        let (n, m) = t.dim();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        total += (a[[i, j]] - b[[k, l]]).powi(2) * t[[i, k]] * t[[j, l]];
                    }
                }
            }
        }
        total
    }

    #[test]
    fn offset_examples() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let d = gw_cost_offset(&a, &array![0.5, 0.5], &array![[1.0]], &array![1.0]).unwrap();
        assert_eq!(d, array![[1.5], [1.5]]);

        let z = gw_cost_offset(
            &Array2::<f64>::zeros((3, 3)),
            &array![0.2, 0.3, 0.5],
            &Array2::zeros((2, 2)),
            &array![0.5, 0.5],
        )
        .unwrap();
        assert!(z.iter().all(|&v| v == 0.0));

        let g = ObservedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mu = array![0.2, 0.5, 0.3];
        let sparse = gw_cost_offset(&g, &mu, &array![[0.0]], &array![1.0]).unwrap();
        let dense = gw_cost_offset(&g.to_dense(), &mu, &array![[0.0]], &array![1.0]).unwrap();
        assert_eq!(sparse, dense);
        assert_eq!(sparse.column(0).to_vec(), vec![0.5, 0.5, 0.5]);

        assert!(gw_cost_offset(&a, &array![1.0], &array![[1.0]], &array![1.0]).is_err());
    }

    #[test]
    fn objective_matches_quadruple_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let (n, m) = (rng.random_range(1..5), rng.random_range(1..5));
            let a = random_symmetric(&mut rng, n);
            let b = random_symmetric(&mut rng, m);
            let mu_a = random_measure(&mut rng, n);
            let mu_b = random_measure(&mut rng, m);
            let t = crate::model::TransportPlan::product(&mu_a, &mu_b).into_coupling();
            let fast = gw_objective(&a, &mu_a, &b, &mu_b, t.view()).unwrap();
            assert!((fast - brute_objective(&a, &b, &t)).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_is_symmetric_under_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (n, m) = (rng.random_range(1..7), rng.random_range(1..7));
            let a = random_symmetric(&mut rng, n);
            let b = random_symmetric(&mut rng, m);
            let mu_a = random_measure(&mut rng, n);
            let mu_b = random_measure(&mut rng, m);
            let raw = Array2::from_shape_fn((n, m), |_| rng.random::<f64>());
            let t = round_to_marginals(raw, &mu_a, &mu_b);
            let ab = gw_objective(&a, &mu_a, &b, &mu_b, t.view()).unwrap();
            let ba = gw_objective(&b, &mu_b, &a, &mu_a, t.t()).unwrap();
            assert!((ab - ba).abs() < 1e-12, "{ab} {ba}");
        }
    }

    #[test]
    fn proximal_examples() {
        let cfg = SolverConfig::default();
        let one = array![1.0];
        let r = solve_proximal_gw(&array![[0.4]], &one, &array![[0.4]], &one, &cfg, None).unwrap();
        assert_eq!(r.distance_sq, 0.0);
        assert_eq!(r.plan.coupling(), &array![[1.0]]);

        let r = solve_proximal_gw(&array![[0.0]], &one, &array![[1.0]], &one, &cfg, None).unwrap();
        assert!((r.distance_sq - 1.0).abs() < 1e-15);

        // Every plan gives sum a_ij^2 mu_i mu_j = 2 * 1/4 against a zero matrix.
        let edge = ObservedGraph::from_edges(2, [(0, 1)]).unwrap();
        let zero = StepFunction::new(Array2::zeros((2, 2)), array![0.5, 0.5]).unwrap();
        let r = proximal_gw(&edge, &zero, &cfg).unwrap();
        assert!((r.distance_sq - 0.5).abs() < 1e-12);
    }

    #[test]
    fn plans_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = SolverConfig::default();
        for _ in 0..30 {
            let (n, m) = (rng.random_range(2..30), rng.random_range(1..12));
            let a = random_symmetric(&mut rng, n);
            let b = random_symmetric(&mut rng, m);
            let mu_a = random_measure(&mut rng, n);
            let mu_b = random_measure(&mut rng, m);
            let r = solve_proximal_gw(&a, &mu_a, &b, &mu_b, &cfg, None).unwrap();
            let (rr, cr) = r.plan.residuals();
            assert!(rr <= MARGINAL_TOL && cr <= MARGINAL_TOL);
            assert!(r.plan.coupling().iter().all(|&v| v >= 0.0));
            assert!(r.distance_sq.is_finite() && r.distance_sq >= 0.0);
        }
    }

    #[test]
    fn distance_is_invariant_to_node_relabeling() {
        let spec = crate::model::GraphonSpec::from(crate::model::Family::Product);
        let g = crate::sampling::sample_graph(&spec, 40, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = StepFunction::uniform(random_symmetric(&mut rng, 6)).unwrap();
        let cfg = SolverConfig::default();
        let base = proximal_gw(&g, &w, &cfg).unwrap().distance_sq;
        let perm: Vec<usize> = (0..40).rev().collect();
        let moved = proximal_gw(&g.permuted(&perm).unwrap(), &w, &cfg).unwrap().distance_sq;
        assert!((base - moved).abs() < 1e-6);
    }
}
