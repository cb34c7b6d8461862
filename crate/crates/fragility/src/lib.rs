//! Block fragility index analytics for multivariate extremes.
//!
//! Given a random vector partitioned into named blocks, the fragility index
//! is the expected number of blocks whose internal maximum exceeds a high
//! threshold, conditional on at least one block exceeding it. This crate
//! computes that index and its companions, both in closed form for
//! parametric dependence models and nonparametrically from data:
//!
//! - [`models`]: logistic, asymmetric logistic and factor-Pareto max-stable
//!   families plus a Gaussian testbed; extremal coefficients, copulas,
//!   stable tail dependence functions, seeded samplers.
//! - [`fragility`]: the block fragility index, the distribution of the
//!   number of exceeding blocks, and its structural bounds and identities.
//! - [`taildep`]: block tail dependence coefficients lambda and tau, and
//!   alternative fragility routes built from them.
//! - [`asympt`]: residual dependence indices eta for asymptotically
//!   independent vectors (Gaussian closed form, min-Pareto testbed).
//! - [`estimation`]: rank-based estimators of every quantity above.
//! - [`montecarlo`]: empirical exceedance distributions on simulated data
//!   and closed-form-versus-simulation consistency checks.
//! - [`io`]: CSV ingestion, negative log-returns, monthly block maxima.

// Validation guards are written as `!(x > 0.0)` on purpose: the negation
// rejects NaN, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asympt;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod fragility;
pub mod io;
pub mod models;
pub mod montecarlo;
pub mod partition;
pub mod taildep;

#[cfg(test)]
pub(crate) mod testutil;

pub use dataset::{Dataset, MarginSpec};
pub use error::{Error, Result};
pub use partition::{Partition, PartitionConfig, SubsetKey};
