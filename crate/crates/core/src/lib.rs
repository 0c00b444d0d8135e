//! Exact critical probabilities and explicit moment lower bounds for
//! `r`-neighbour bootstrap percolation on Galton–Watson trees.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: log-gamma, log-beta, binomial tails, gamma-ratio brackets.
//! * [`offspring`]: offspring distributions, moments, truncation, sampling and
//!   the extremal mean-`b` family.
//! * [`gfunction`]: the kernels `g_k^r` and their average `G_ξ^r`.
//! * [`critical`]: `p_c = 1 - 1/max G`, plus the density-evolution recursion
//!   and a bisection threshold as an independent route.
//! * [`bounds`]: the moment lower bounds with every constant made explicit,
//!   numerical checks of the integral inequalities behind them, and the
//!   sharpness experiments.
//! * [`simulator`]: Monte Carlo sampling of truncated trees and the bootstrap
//!   closure itself.
//!
//! ```
//! use gwboot::{critical::critical_probability, offspring::make_constant};
//!
//! let tree = make_constant(3)?;
//! let profile = critical_probability(&tree, 2, 1e-10)?;
//! assert!((profile.p_c - 1.0 / 9.0).abs() < 1e-9);
//! # Ok::<(), gwboot::Error>(())
//! ```

// domain checks are written `!(x > 0.0)` so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod critical;
pub mod error;
pub mod gfunction;
pub mod offspring;
pub mod optimize;
pub mod quadrature;
pub mod seed;
pub mod simulator;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use offspring::{DistSpec, OffspringDistribution};
pub use seed::SeedSpec;
