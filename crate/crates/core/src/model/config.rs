use crate::error::{Error, Result};

/// Hyperparameters shared by the barycenter estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight of the proximal KL term (and entropic weight for assignment updates).
    pub beta: f64,
    /// Alternating barycenter iterations.
    pub outer_iters: usize,
    /// Proximal steps per transport solve.
    pub sinkhorn_iters: usize,
    /// Smoothness weight for the smoothed barycenter.
    pub alpha: f64,
    pub seed: u64,
    /// Sinkhorn scaling sweeps inside one proximal step (one sweep is a
    /// column update followed by a row update).
    pub inner_iters: usize,
    /// Sinkhorn stops early once the column residual drops below this.
    pub marginal_tol: f64,
    /// Start each transport solve from the previous outer iteration's plan
    /// instead of the product coupling.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            beta: 0.005,
            outer_iters: 5,
            sinkhorn_iters: 10,
            alpha: 0.0002,
            seed: 0,
            inner_iters: 1,
            marginal_tol: 1e-9,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    /// Settings for metric evaluation, where the transport solve should be
    /// close to converged rather than follow the estimator's schedule.
    pub fn evaluation() -> Self {
        SolverConfig {
            beta: 0.002,
            sinkhorn_iters: 30,
            inner_iters: 100,
            ..SolverConfig::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::domain(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if self.outer_iters == 0 || self.sinkhorn_iters == 0 || self.inner_iters == 0 {
            return Err(Error::domain("iteration counts must be positive"));
        }
        if !(self.marginal_tol >= 0.0) {
            return Err(Error::domain("marginal tolerance must be nonnegative"));
        }
        Ok(())
    }
}
