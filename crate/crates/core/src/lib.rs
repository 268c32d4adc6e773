//! Graphon estimation from collections of unaligned graphs.
//!
//! Graphs sampled from an unknown graphon are summarized by a step function
//! computed as a Gromov-Wasserstein barycenter of the observed adjacency
//! matrices. The crate also provides a smoothness-regularized barycenter, a
//! mixture of barycenters for clustering graph populations, baselines and
//! error metrics for benchmarking, and plain-text file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barycenter;
pub mod cli;
pub mod error;
pub mod eval;
pub mod gw;
pub mod io;
pub mod mixture;
pub mod model;
pub mod sampling;
pub mod smoothed;

pub use error::{Error, Result};
pub use model::{Family, GraphonSpec, ObservedGraph, SolverConfig, StepFunction, TransportPlan};
