use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-12;

/// A piecewise-constant graphon: a symmetric `K x K` value matrix over a
/// partition of `[0, 1]` whose part sizes are given by `measure`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    values: Array2<f64>,
    measure: Array1<f64>,
}

impl StepFunction {
    /// Validates and wraps the given values and measure.
    pub fn new(values: Array2<f64>, measure: Array1<f64>) -> Result<Self> {
        Self::validate(&values, &measure, MASS_TOL)?;
        Ok(StepFunction { values, measure })
    }

    /// Like [`StepFunction::new`] but with a caller-chosen tolerance on the
    /// total mass of `measure`.
    pub(crate) fn with_mass_tolerance(values: Array2<f64>, measure: Array1<f64>, mass_tol: f64) -> Result<Self> {
        Self::validate(&values, &measure, mass_tol)?;
        Ok(StepFunction { values, measure })
    }

    pub(crate) fn validate(values: &Array2<f64>, measure: &Array1<f64>, mass_tol: f64) -> Result<()> {
        let (r, c) = values.dim();
        if r == 0 || r != c {
            return Err(Error::dims("non-empty square matrix", format!("{r}x{c}")));
        }
        if measure.len() != r {
            return Err(Error::dims(r, measure.len()));
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!("value ({i},{j}) = {v} outside [0,1]")));
            }
            if (v - values[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(Error::Validation(format!("values not symmetric at ({i},{j})")));
            }
        }
        if measure.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::Validation("measure entries must be positive".into()));
        }
        let total: f64 = measure.sum();
        if (total - 1.0).abs() > mass_tol {
            return Err(Error::Validation(format!("measure sums to {total}, not 1")));
        }
        if measure.windows(2).into_iter().any(|w| w[1] > w[0]) {
            return Err(Error::Validation("measure must be nonincreasing".into()));
        }
        Ok(())
    }

    /// Symmetrizes and clamps `values`, and renormalizes `measure`, before
    /// validating.
    pub fn from_estimate(values: Array2<f64>, measure: Array1<f64>) -> Result<Self> {
        let values = symmetrize_clamp(values);
        let total = measure.sum();
        let measure = measure / total;
        Self::new(values, measure)
    }

    /// A step function with `k` equal parts.
    pub fn uniform(values: Array2<f64>) -> Result<Self> {
        let k = values.nrows();
        Self::from_estimate(values, Array1::from_elem(k, 1.0 / k as f64))
    }

    pub fn k(&self) -> usize {
        self.measure.len()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn measure(&self) -> &Array1<f64> {
        &self.measure
    }

    pub fn into_parts(self) -> (Array2<f64>, Array1<f64>) {
        (self.values, self.measure)
    }
}

/// `(W + W^T) / 2`, clamped entrywise to `[0, 1]`. NaNs map to zero.
pub(crate) fn symmetrize_clamp(mut w: Array2<f64>) -> Array2<f64> {
    let k = w.nrows();
    for i in 0..k {
        for j in i..k {
            let v = 0.5 * (w[[i, j]] + w[[j, i]]);
            let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    w
}
