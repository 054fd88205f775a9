//! Sandwich variance estimators for dyadic regressions.
//!
//! All three estimators share the form
//!
//! ```text
//! V̂ = (Σ_k x_k x_k')⁻¹ · meat · (Σ_k x_k x_k')⁻¹,
//! meat = Σ_m Σ_{m'} w(m,m') ε̂_m ε̂_{m'} x_m x_{m'}',
//! ```
//!
//! in the raw (unnormalized) scale, and differ only in the pair weights:
//!
//! - **EHW**: `w = 1` iff `m = m'` (own-dyad terms only);
//! - **dyadic-robust**: `w = 1` iff `m = m'` or the dyads share a unit;
//! - **network-HAC**: `w = ω(ρ(m,m')/b)` for a kernel `ω` and bandwidth `b`,
//!   summed over all connected dyad pairs; disconnected pairs contribute zero.
//!
//! The network estimator is evaluated shell by shell: a truncated BFS from
//! each dyad enumerates distance shells up to `⌊b⌋`, each shell's score sum
//! is weighted once, and a single outer product per source dyad accumulates
//! the meat. This avoids the `O(M²)` double sum while producing the same
//! matrix. With the rectangular kernel the estimators collapse exactly:
//! bandwidth below one recovers EHW and bandwidth one recovers the
//! dyadic-robust estimator.
//!
//! Meat sums are computed in fixed-size blocks of dyads that may be evaluated
//! in parallel; partial matrices are always reduced in block order, so
//! results are bit-identical regardless of the worker count.

use crate::dyad::{BfsScratch, DyadNetwork};
use crate::error::{Error, Result};
use crate::regression::OlsFit;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

/// Kernel weight functions on normalized distance.
///
/// Members of the class satisfy `ω(0) = 1`, `ω(z) = 0` for `|z| > 1`, and
/// `ω(z) = ω(−z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `ω(z) = 1` for `|z| ≤ 1`.
    Rectangular,
    /// `ω(z) = 1 − |z|` for `|z| ≤ 1`.
    Bartlett,
}

impl Kernel {
    /// Evaluates `ω(z)`.
    pub fn weight(&self, z: f64) -> f64 {
        let a = z.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Rectangular => 1.0,
            Kernel::Bartlett => 1.0 - a,
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Rectangular => write!(f, "rectangular"),
            Kernel::Bartlett => write!(f, "bartlett"),
        }
    }
}

/// Which estimator produced a [`VarianceEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Ehw,
    Dyadic,
    Network,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] =
        [EstimatorKind::Ehw, EstimatorKind::Dyadic, EstimatorKind::Network];
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::Ehw => write!(f, "ehw"),
            EstimatorKind::Dyadic => write!(f, "dyadic"),
            EstimatorKind::Network => write!(f, "network"),
        }
    }
}

/// All estimates are reported on this scale; no `1/M` or `√N` factors are
/// applied, so entries feed confidence intervals directly.
pub const SCALE_NOTE: &str = "raw sandwich: (X'X)^-1 * unnormalized meat * (X'X)^-1";

/// A `K×K` sandwich variance matrix plus provenance.
#[derive(Debug, Clone)]
pub struct VarianceEstimate {
    pub matrix: DMatrix<f64>,
    pub kind: EstimatorKind,
    /// Kernel used (network estimator only).
    pub kernel: Option<Kernel>,
    /// Bandwidth used (network estimator only).
    pub bandwidth: Option<f64>,
    /// Whether an eigenvalue repair has been applied.
    pub psd_repaired: bool,
    /// Constant added to every eigenvalue by the repair.
    pub repair_epsilon: Option<f64>,
    /// Scale convention of `matrix`.
    pub scale_note: &'static str,
}

impl VarianceEstimate {
    /// Standard error of coordinate `k`, `None` when the diagonal entry is
    /// negative (apply [`repair_psd`]) or out of range.
    pub fn std_error(&self, k: usize) -> Option<f64> {
        let v = *self.matrix.get((k, k))?;
        (v >= 0.0).then(|| v.sqrt())
    }

    /// Smallest eigenvalue of the (symmetrized) matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min)
    }
}

/// Dyad ids of the fitted rows must form a bijection onto `0..M`; returns
/// `row_of[d]` = the data row carrying dyad `d`.
fn dyad_alignment(fit: &OlsFit, n_dyads: usize) -> Result<Vec<usize>> {
    let ids = &fit.data.dyad_ids;
    if ids.len() != n_dyads {
        return Err(Error::InvalidVariance(format!(
            "fit has {} rows but the dyad network has {n_dyads} dyads",
            ids.len()
        )));
    }
    let mut row_of = vec![usize::MAX; n_dyads];
    for (r, &d) in ids.iter().enumerate() {
        if d >= n_dyads {
            return Err(Error::InvalidVariance(format!(
                "row {r} refers to dyad {d}, outside 0..{n_dyads}"
            )));
        }
        if row_of[d] != usize::MAX {
            return Err(Error::InvalidVariance(format!("dyad {d} appears in two rows")));
        }
        row_of[d] = r;
    }
    Ok(row_of)
}

/// Scores laid out `K×M` with one column per dyad (or per sorted row for the
/// network-free EHW case), so the hot loops read contiguous columns.
fn scores_by_column(fit: &OlsFit, order: &[usize]) -> DMatrix<f64> {
    let k = fit.scores.ncols();
    DMatrix::from_fn(k, order.len(), |i, c| fit.scores[(order[c], i)])
}

/// Dyads per parallel block; fixed so that reductions are identical for any
/// worker count.
const MEAT_BLOCK: usize = 256;

/// Accumulates `Σ_d scores[:,d] · w_d'` where `weight` fills `w_d`.
///
/// Blocks of `MEAT_BLOCK` columns are evaluated (optionally in parallel) and
/// reduced in block order.
fn accumulate_meat<S, F>(
    scores: &DMatrix<f64>,
    parallel: bool,
    make_scratch: impl Fn() -> S + Sync,
    weight: F,
) -> DMatrix<f64>
where
    S: Send,
    F: Fn(usize, &mut S, &mut DVector<f64>) + Sync,
{
    let k = scores.nrows();
    let m = scores.ncols();
    let n_blocks = m.div_ceil(MEAT_BLOCK).max(1);
    let block_partial = |b: usize| {
        let mut scratch = make_scratch();
        let mut w = DVector::zeros(k);
        let mut partial = DMatrix::zeros(k, k);
        let lo = b * MEAT_BLOCK;
        let hi = ((b + 1) * MEAT_BLOCK).min(m);
        for d in lo..hi {
            weight(d, &mut scratch, &mut w);
            partial.ger(1.0, &scores.column(d), &w, 1.0);
        }
        partial
    };
    let partials: Vec<DMatrix<f64>> = if parallel && n_blocks > 1 {
        (0..n_blocks).into_par_iter().map(block_partial).collect()
    } else {
        (0..n_blocks).map(block_partial).collect()
    };
    let mut meat = DMatrix::zeros(k, k);
    for p in partials {
        meat += p;
    }
    meat
}

fn sandwich(fit: &OlsFit, meat: DMatrix<f64>) -> DMatrix<f64> {
    &fit.bread * meat * &fit.bread
}

/// Heteroskedasticity-robust estimator: own-dyad score cross-products only.
pub fn ehw_variance(fit: &OlsFit) -> VarianceEstimate {
    // canonical order: rows sorted by dyad id
    let mut order: Vec<usize> = (0..fit.data.n_rows()).collect();
    order.sort_by_key(|&r| fit.data.dyad_ids[r]);
    let scores = scores_by_column(fit, &order);
    let meat = accumulate_meat(
        &scores,
        false,
        || (),
        |d, _, w| {
            w.fill(0.0);
            w.axpy(1.0, &scores.column(d), 1.0);
        },
    );
    VarianceEstimate {
        matrix: sandwich(fit, meat),
        kind: EstimatorKind::Ehw,
        kernel: None,
        bandwidth: None,
        psd_repaired: false,
        repair_epsilon: None,
        scale_note: SCALE_NOTE,
    }
}

/// Dyadic-robust estimator: cross-products over each dyad and the dyads
/// adjacent to it (sharing a unit).
pub fn dyadic_robust_variance(fit: &OlsFit, net: &DyadNetwork) -> Result<VarianceEstimate> {
    let row_of = dyad_alignment(fit, net.n_dyads())?;
    let scores = scores_by_column(fit, &row_of);
    let meat = accumulate_meat(
        &scores,
        false,
        || DVector::zeros(scores.nrows()),
        |d, adj_sum: &mut DVector<f64>, w| {
            w.fill(0.0);
            w.axpy(1.0, &scores.column(d), 1.0);
            adj_sum.fill(0.0);
            for &n in net.adjacency(d).expect("validated id") {
                adj_sum.axpy(1.0, &scores.column(n), 1.0);
            }
            w.axpy(1.0, adj_sum, 1.0);
        },
    );
    Ok(VarianceEstimate {
        matrix: sandwich(fit, meat),
        kind: EstimatorKind::Dyadic,
        kernel: None,
        bandwidth: None,
        psd_repaired: false,
        repair_epsilon: None,
        scale_note: SCALE_NOTE,
    })
}

/// Options controlling the network-HAC evaluation.
#[derive(Debug, Clone, Copy)]
pub struct HacOptions {
    /// Evaluate meat blocks on the rayon pool.
    pub parallel: bool,
}

impl Default for HacOptions {
    fn default() -> Self {
        HacOptions { parallel: true }
    }
}

/// Network-HAC estimator: kernel-weighted cross-products over all connected
/// dyad pairs, computed shell-wise with BFS truncated at `⌊bandwidth⌋`.
pub fn network_hac_variance(
    fit: &OlsFit,
    net: &DyadNetwork,
    kernel: Kernel,
    bandwidth: f64,
) -> Result<VarianceEstimate> {
    network_hac_variance_with(fit, net, kernel, bandwidth, HacOptions::default())
}

/// [`network_hac_variance`] with explicit evaluation options.
pub fn network_hac_variance_with(
    fit: &OlsFit,
    net: &DyadNetwork,
    kernel: Kernel,
    bandwidth: f64,
    opts: HacOptions,
) -> Result<VarianceEstimate> {
    if !bandwidth.is_finite() || bandwidth <= 0.0 {
        return Err(Error::InvalidVariance(format!(
            "bandwidth must be a positive finite real, got {bandwidth}"
        )));
    }
    let row_of = dyad_alignment(fit, net.n_dyads())?;
    let scores = scores_by_column(fit, &row_of);
    let k = scores.nrows();
    let m = net.n_dyads();
    let cap = (bandwidth.floor() as usize).min(m.saturating_sub(1));
    let meat = accumulate_meat(
        &scores,
        opts.parallel,
        || (BfsScratch::new(m), DVector::<f64>::zeros(k)),
        |d, scratch, w| {
            let (bfs, shell_sum) = scratch;
            w.fill(0.0);
            net.for_each_shell(d, cap, bfs, |s, shell| {
                let ws = kernel.weight(s as f64 / bandwidth);
                if ws == 0.0 {
                    return;
                }
                shell_sum.fill(0.0);
                for &n in shell {
                    shell_sum.axpy(1.0, &scores.column(n), 1.0);
                }
                w.axpy(ws, shell_sum, 1.0);
            })
            .expect("validated id");
        },
    );
    Ok(VarianceEstimate {
        matrix: sandwich(fit, meat),
        kind: EstimatorKind::Network,
        kernel: Some(kernel),
        bandwidth: Some(bandwidth),
        psd_repaired: false,
        repair_epsilon: None,
        scale_note: SCALE_NOTE,
    })
}

/// Data-driven bandwidth `2·log(M) / log(max(average degree, 1.05))` using
/// the dyad-network average degree.
pub fn default_bandwidth(net: &DyadNetwork) -> Result<f64> {
    if net.n_dyads() == 0 {
        return Err(Error::InvalidVariance("bandwidth rule needs at least one dyad".into()));
    }
    bandwidth_from_average_degree(net.n_dyads(), net.average_degree())
}

/// The bandwidth rule for an arbitrary size/degree pair; callers preferring
/// the node-network average degree can pass it here.
pub fn bandwidth_from_average_degree(m: usize, average_degree: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidVariance("bandwidth rule needs at least one dyad".into()));
    }
    Ok(2.0 * (m as f64).ln() / average_degree.max(1.05).ln())
}

/// Adds `epsilon` to every eigenvalue of a symmetric variance matrix and
/// reassembles it, restoring positive semidefiniteness.
pub fn repair_psd(v: &VarianceEstimate, epsilon: f64) -> Result<VarianceEstimate> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidVariance(format!(
            "repair epsilon must be a nonnegative real, got {epsilon}"
        )));
    }
    let a = &v.matrix;
    let scale = a.amax().max(1.0);
    let asym = (a - a.transpose()).amax();
    if asym > 1e-8 * scale {
        return Err(Error::InvalidVariance(format!(
            "matrix is asymmetric beyond tolerance: max |A - A'| = {asym:.3e}"
        )));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let repaired = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l + epsilon))
        * eig.eigenvectors.transpose();
    Ok(VarianceEstimate {
        matrix: repaired,
        psd_repaired: true,
        repair_epsilon: Some(epsilon),
        ..v.clone()
    })
}

/// Normal critical value for a two-sided interval at `level`.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidVariance(format!(
            "confidence level must lie in (0,1), got {level}"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf((1.0 + level) / 2.0))
}

/// Two-sided Normal confidence interval for coordinate `coord`.
pub fn confidence_interval(
    fit: &OlsFit,
    v: &VarianceEstimate,
    coord: usize,
    level: f64,
) -> Result<(f64, f64)> {
    let k = fit.beta.len();
    if coord >= k {
        return Err(Error::InvalidId(format!("coordinate {coord} out of range 0..{k}")));
    }
    let vkk = v.matrix[(coord, coord)];
    if vkk < 0.0 {
        return Err(Error::NegativeVariance {
            coord,
            value: vkk,
        });
    }
    let z = normal_critical_value(level)?;
    let half = z * vkk.sqrt();
    let b = fit.beta[coord];
    Ok((b - half, b + half))
}
