//! Domain types shared across the estimators: analytic graphons, step
//! functions, observed graphs, transport plans and solver settings.

mod config;
mod graph;
mod graphon;
mod plan;
pub(crate) mod step;

pub use config::SolverConfig;
pub use graph::ObservedGraph;
pub use graphon::{discretize_graphon, evaluate_graphon, Family, GraphonSpec};
pub use plan::{TransportPlan, MARGINAL_TOL};
pub use step::StepFunction;
