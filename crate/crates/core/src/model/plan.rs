use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Tolerance on marginal residuals for a plan to count as feasible.
pub const MARGINAL_TOL: f64 = 1e-6;

/// A nonnegative coupling between two probability vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    coupling: Array2<f64>,
    row_marginal: Array1<f64>,
    col_marginal: Array1<f64>,
}

impl TransportPlan {
    pub fn new(coupling: Array2<f64>, row_marginal: Array1<f64>, col_marginal: Array1<f64>) -> Result<Self> {
        let plan = TransportPlan::new_unchecked(coupling, row_marginal, col_marginal)?;
        if plan.coupling.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Validation("coupling has negative or NaN entries".into()));
        }
        let (r, c) = plan.residuals();
        if r > MARGINAL_TOL || c > MARGINAL_TOL {
            return Err(Error::Validation(format!(
                "marginal residuals ({r:e}, {c:e}) exceed {MARGINAL_TOL:e}"
            )));
        }
        Ok(plan)
    }

    pub(crate) fn new_unchecked(
        coupling: Array2<f64>,
        row_marginal: Array1<f64>,
        col_marginal: Array1<f64>,
    ) -> Result<Self> {
        let (n, k) = coupling.dim();
        if row_marginal.len() != n || col_marginal.len() != k {
            return Err(Error::dims(
                format!("{n}x{k} marginals"),
                format!("{}x{}", row_marginal.len(), col_marginal.len()),
            ));
        }
        Ok(TransportPlan {
            coupling,
            row_marginal,
            col_marginal,
        })
    }

    /// The independent coupling `row * col^T`.
    pub fn product(row_marginal: &Array1<f64>, col_marginal: &Array1<f64>) -> Self {
        let coupling = outer(row_marginal, col_marginal);
        TransportPlan {
            coupling,
            row_marginal: row_marginal.clone(),
            col_marginal: col_marginal.clone(),
        }
    }

    pub fn coupling(&self) -> &Array2<f64> {
        &self.coupling
    }

    pub fn row_marginal(&self) -> &Array1<f64> {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &Array1<f64> {
        &self.col_marginal
    }

    pub fn into_coupling(self) -> Array2<f64> {
        self.coupling
    }

    /// Max-abs deviation of the row sums and column sums from their marginals.
    pub fn residuals(&self) -> (f64, f64) {
        let rows = self.coupling.sum_axis(Axis(1));
        let cols = self.coupling.sum_axis(Axis(0));
        (
            max_abs_diff(&rows, &self.row_marginal),
            max_abs_diff(&cols, &self.col_marginal),
        )
    }

    pub fn is_feasible(&self) -> bool {
        let (r, c) = self.residuals();
        r <= MARGINAL_TOL && c <= MARGINAL_TOL && self.coupling.iter().all(|&v| v >= 0.0)
    }
}

pub(crate) fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
