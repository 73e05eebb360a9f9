//! Riemann-sum approximations of stochastic integrals driven by Gaussian
//! processes with rough covariance.
//!
//! The crate computes, path by path, three sums over a partition of `[0, T]`:
//! a Taylor-compensated Riemann sum whose limit is the Stratonovich-type
//! integral, a Skorohod-Riemann sum built from iterated divergences in closed
//! Hermite form, and a Young sum against the covariance diagonal `R(t, t)`.
//! The conversion residual `oracle - skorohod - young / 2` should vanish as
//! the mesh shrinks, and [`experiments`] measures it by Monte Carlo.

pub mod chaos;
pub mod error;
pub mod experiments;
pub mod integrals;
pub mod kernel;
pub mod multi_index;
pub mod sampler;
pub mod testfn;
pub mod variation;

pub use chaos::{ChaosSum, ChaosTerm, SkorohodPlan};
pub use error::{Error, Result};
pub use experiments::{ConvergenceReport, ConvergenceRow, Experiment, ExperimentConfig};
pub use integrals::{Quadrature, SumSpec};
pub use kernel::{CovarianceKernel, KernelFamily, KernelSpec, Partition, PartitionTables};
pub use multi_index::MultiIndex;
pub use sampler::{PathSampler, SamplePath, SimConfig};
pub use testfn::{FunctionSpec, TestFunction};
pub use variation::VariationReport;
