//! Linear regression on dyadic data with variance estimators that stay
//! valid when errors are correlated along a network over the dyads.
//!
//! Observations are *dyads*: pairs of units linked in an observed network
//! (trading country pairs, co-seated legislators). Classical dyadic-robust
//! standard errors assume two dyads can only be correlated when they share a
//! unit; when shocks spill over further along the network, that assumption
//! understates the variance. This crate implements, next to the
//! Eicker-Huber-White and dyadic-robust baselines, a network-HAC estimator
//! that kernel-weights score cross-products by geodesic distance on the
//! network over dyads, plus the machinery around it:
//!
//! - [`dyad`]: dyad enumeration, the network over dyads, distances, shells;
//! - [`graphgen`]: seeded Erdős–Rényi and Barabási–Albert generators;
//! - [`regression`]: OLS and within-group demeaning for fixed effects;
//! - [`variance`]: the three estimators, kernels, the bandwidth rule,
//!   eigenvalue repair, confidence intervals;
//! - [`diagnostics`]: network denseness measures screening the conditions
//!   under which the HAC estimator is consistent;
//! - [`montecarlo`]: coverage/length/bias experiments on random graphs;
//! - [`io`] and [`cli`]: CSV formats, table rendering, and the `netdyad`
//!   command-line tool.
//!
//! See the crate examples for end-to-end walkthroughs of each capability.

pub mod cli;
pub mod diagnostics;
pub mod dyad;
pub mod error;
pub mod graphgen;
pub mod io;
pub mod montecarlo;
pub mod regression;
pub mod variance;

pub use error::{Error, Result};
