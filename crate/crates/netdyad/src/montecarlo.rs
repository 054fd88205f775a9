//! Coverage and bias experiments for the three variance estimators.
//!
//! Each replication draws a random graph, dyad covariates, and errors with
//! network-decaying spillovers; fits OLS; and records, per estimator, the
//! standard error and whether the confidence interval covers the true
//! coefficient. The data-generating process is
//!
//! ```text
//! y_m = x_m β + ε_m,      x_m = |z_i − z_j|,  z ~ N(0,1) per node,
//! ε_m = η_m + Σ_{s=1..S} γ^s Σ_{m' ∈ shell(m;s)} η_{m,m'},
//! ```
//!
//! where by default `η_{m,m'}` is a single standard-normal shock shared by
//! the unordered dyad pair, so errors of dyads at distance `s ≤ S` correlate
//! through their common pair shock; [`ShockMode::OrderedPair`] draws an
//! independent shock per ordered pair instead (no cross correlation), kept as
//! an experimental alternative. The own shock `η_m` always enters with
//! weight one.
//!
//! Replications are deterministic functions of `(base seed, replication
//! index, attempt)`: every random phase draws from its own ChaCha8 stream,
//! and aggregation reduces in replication order, so a study reproduces
//! bit-identically for any worker count.

use crate::dyad::{build_dyad_index, build_dyad_network, BfsScratch, DyadIndex, DyadNetwork};
use crate::error::{Error, Result};
use crate::graphgen::{sample_barabasi_albert, sample_erdos_renyi, GraphKind, GraphSpec};
use crate::regression::{ols_fit, RegressionData};
use crate::variance::{
    confidence_interval, default_bandwidth, dyadic_robust_variance, ehw_variance,
    network_hac_variance_with, repair_psd, EstimatorKind, HacOptions, Kernel, VarianceEstimate,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::sync::Arc;

/// Bandwidth choice for the network estimator inside a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// Use this bandwidth in every replication.
    Fixed(f64),
    /// Recompute `2 log(M)/log(max(avg degree, 1.05))` per realized network.
    Auto,
}

/// How the pair shocks `η_{m,m'}` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShockMode {
    /// One shock per unordered dyad pair, shared by both endpoints.
    SharedPair,
    /// Independent shock per ordered pair; errors are cross-sectionally
    /// uncorrelated. Experimental comparison mode.
    OrderedPair,
}

/// Full specification of a Monte Carlo study.
#[derive(Debug, Clone, PartialEq)]
pub struct McStudyConfig {
    pub graph: GraphSpec,
    /// Maximum geodesic distance `S` the spillovers propagate to.
    pub spillover_radius: usize,
    /// Spillover decay `γ`; distance-`s` pair shocks are weighted `γ^s`.
    pub gamma: f64,
    pub beta_true: f64,
    pub reps: usize,
    pub level: f64,
    pub kernel: Kernel,
    pub bandwidth: BandwidthRule,
    pub base_seed: u64,
    pub psd_epsilon: f64,
    /// Draw the graph once and reuse it across replications.
    pub fix_graph: bool,
    pub shock_mode: ShockMode,
    /// Worker threads for the replication loop; `None` uses the ambient pool.
    pub threads: Option<usize>,
}

impl McStudyConfig {
    /// A study with the experiment defaults: `β = 1`, 95% level,
    /// rectangular kernel with bandwidth 2, shared pair shocks, redrawing
    /// the graph every replication.
    pub fn new(graph: GraphSpec, spillover_radius: usize, gamma: f64, reps: usize) -> Self {
        McStudyConfig {
            graph,
            spillover_radius,
            gamma,
            beta_true: 1.0,
            reps,
            level: 0.95,
            kernel: Kernel::Rectangular,
            bandwidth: BandwidthRule::Fixed(2.0),
            base_seed: 0,
            psd_epsilon: 0.005,
            fix_graph: false,
            shock_mode: ShockMode::SharedPair,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        if !(-1.0..=1.0).contains(&self.gamma) {
            return Err(Error::MonteCarlo(format!(
                "gamma must lie in [-1, 1], got {}",
                self.gamma
            )));
        }
        if self.reps == 0 {
            return Err(Error::MonteCarlo("reps must be at least 1".into()));
        }
        if !(0.0 < self.level && self.level < 1.0) {
            return Err(Error::MonteCarlo(format!(
                "level must lie in (0,1), got {}",
                self.level
            )));
        }
        if !self.psd_epsilon.is_finite() || self.psd_epsilon < 0.0 {
            return Err(Error::MonteCarlo(format!(
                "psd epsilon must be nonnegative, got {}",
                self.psd_epsilon
            )));
        }
        if let BandwidthRule::Fixed(b) = self.bandwidth {
            if !b.is_finite() || b <= 0.0 {
                return Err(Error::MonteCarlo(format!("bandwidth must be positive, got {b}")));
            }
        }
        Ok(())
    }
}

/// Random phases of one replication, each on its own RNG stream.
#[derive(Debug, Clone, Copy)]
enum McPhase {
    GraphEdges = 0,
    GraphAttach = 1,
    Covariates = 2,
    Shocks = 3,
}

const MAX_ATTEMPTS: u32 = 64;

/// Stream layout: 2 bits for the phase, 6 bits for the resample attempt,
/// the rest for the replication index.
fn substream(base_seed: u64, rep: u64, attempt: u32, phase: McPhase) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream((rep << 8) | ((attempt as u64 & 0x3f) << 2) | phase as u64);
    rng
}

/// Per-estimator outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorRecord {
    pub kind: EstimatorKind,
    pub covered: bool,
    pub ci_length: f64,
    pub se: f64,
    pub psd_repaired: bool,
}

/// Outcome of one replication; `beta_hat` is shared by all estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub beta_hat: f64,
    /// Degenerate graph draws that were discarded before this one.
    pub resampled: u32,
    pub estimators: [EstimatorRecord; 3],
}

/// Aggregated results for one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub kind: EstimatorKind,
    /// Fraction of replications whose interval covered `beta_true`.
    pub coverage: f64,
    pub avg_ci_length: f64,
    pub mean_se: f64,
    /// `(mean SE − empirical SE) / empirical SE · 100`.
    pub bias_pct: f64,
    /// Replications in which the eigenvalue repair fired.
    pub psd_repairs: usize,
}

/// Aggregated study output.
#[derive(Debug, Clone, PartialEq)]
pub struct McTable {
    pub rows: Vec<McRow>,
    /// Standard deviation of `β̂` across replications (the benchmark
    /// "true" standard error).
    pub empirical_se: f64,
    pub reps_completed: usize,
    pub reps_requested: usize,
    /// Total degenerate draws discarded across replications.
    pub resampled: usize,
    pub config: McStudyConfig,
}

/// One `|z_i − z_j|` covariate per dyad from node-level standard normals.
pub fn simulate_covariates(idx: &DyadIndex, rng: &mut impl Rng) -> DVector<f64> {
    let z: Vec<f64> = (0..idx.n_nodes()).map(|_| rng.sample(StandardNormal)).collect();
    DVector::from_iterator(idx.len(), idx.pairs().iter().map(|&(i, j)| (z[i] - z[j]).abs()))
}

/// Errors with spillovers along the dyad network.
///
/// Own shocks are drawn first (one per dyad, in dyad order), then pair
/// shocks in canonical order: source dyad ascending, shell radius ascending,
/// BFS order within a shell. With `gamma = 0` or `s_max = 0` the errors are
/// exactly the own shocks.
pub fn simulate_errors(
    net: &DyadNetwork,
    s_max: usize,
    gamma: f64,
    mode: ShockMode,
    rng: &mut impl Rng,
) -> DVector<f64> {
    let m = net.n_dyads();
    let mut eps: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    if s_max == 0 || gamma == 0.0 {
        return DVector::from_vec(eps);
    }
    let powers: Vec<f64> = (0..=s_max)
        .map(|s| if s == 0 { 1.0 } else { gamma.powi(s as i32) })
        .collect();
    let mut scratch = BfsScratch::new(m);
    let mut pair_adds: Vec<(usize, f64)> = Vec::new();
    for source in 0..m {
        pair_adds.clear();
        net.for_each_shell(source, s_max, &mut scratch, |s, shell| {
            if s == 0 {
                return;
            }
            for &other in shell {
                match mode {
                    ShockMode::SharedPair => {
                        if other > source {
                            pair_adds.push((other, powers[s]));
                        }
                    }
                    ShockMode::OrderedPair => pair_adds.push((usize::MAX, powers[s])),
                }
            }
        })
        .expect("source id in range");
        for &(other, weight) in &pair_adds {
            let shock: f64 = rng.sample(StandardNormal);
            eps[source] += weight * shock;
            if other != usize::MAX {
                eps[other] += weight * shock;
            }
        }
    }
    DVector::from_vec(eps)
}

struct PreparedGraph {
    index: DyadIndex,
    net: DyadNetwork,
}

fn draw_graph(cfg: &McStudyConfig, rep: u64, attempt: u32) -> Result<crate::dyad::NodeGraph> {
    let g = &cfg.graph;
    match g.kind {
        GraphKind::ErdosRenyi => {
            let mut rng = substream(cfg.base_seed, rep, attempt, McPhase::GraphEdges);
            sample_erdos_renyi(g.n_nodes, g.param / g.n_nodes as f64, &mut rng)
        }
        GraphKind::BarabasiAlbert => {
            let mut seed_rng = substream(cfg.base_seed, rep, attempt, McPhase::GraphEdges);
            let mut attach_rng = substream(cfg.base_seed, rep, attempt, McPhase::GraphAttach);
            sample_barabasi_albert(
                g.n_nodes,
                g.param as usize,
                g.seed_lambda,
                &mut seed_rng,
                &mut attach_rng,
            )
        }
    }
}

fn prepare_fixed_graph(cfg: &McStudyConfig) -> Result<PreparedGraph> {
    for attempt in 0..MAX_ATTEMPTS {
        let g = draw_graph(cfg, 0, attempt)?;
        if g.n_edges() > 0 {
            let index = build_dyad_index(&g);
            let net = build_dyad_network(index.clone());
            return Ok(PreparedGraph { index, net });
        }
    }
    Err(Error::MonteCarlo(format!(
        "fixed graph degenerate after {MAX_ATTEMPTS} draws"
    )))
}

/// Applies the eigenvalue repair until no eigenvalue is negative.
fn ensure_psd(v: VarianceEstimate, epsilon: f64) -> Result<(VarianceEstimate, bool)> {
    let mut v = v;
    let mut repaired = false;
    let mut guard = 0;
    while v.min_eigenvalue() < 0.0 {
        v = repair_psd(&v, epsilon)?;
        repaired = true;
        guard += 1;
        if guard > 64 {
            return Err(Error::MonteCarlo("eigenvalue repair failed to converge".into()));
        }
    }
    Ok((v, repaired))
}

fn replication_inner(
    cfg: &McStudyConfig,
    rep: usize,
    fixed: Option<&PreparedGraph>,
) -> Result<ReplicationRecord> {
    let mut resampled = 0u32;
    for attempt in 0..MAX_ATTEMPTS {
        let local;
        let prepared: &PreparedGraph = match fixed {
            Some(p) => p,
            None => {
                let g = draw_graph(cfg, rep as u64, attempt)?;
                if g.n_edges() == 0 {
                    resampled += 1;
                    continue;
                }
                let index = build_dyad_index(&g);
                let net = build_dyad_network(index.clone());
                local = PreparedGraph { index, net };
                &local
            }
        };
        let m = prepared.index.len();
        let mut cov_rng = substream(cfg.base_seed, rep as u64, attempt, McPhase::Covariates);
        let x = simulate_covariates(&prepared.index, &mut cov_rng);
        let mut shock_rng = substream(cfg.base_seed, rep as u64, attempt, McPhase::Shocks);
        let eps = simulate_errors(
            &prepared.net,
            cfg.spillover_radius,
            cfg.gamma,
            cfg.shock_mode,
            &mut shock_rng,
        );
        let y = &x * cfg.beta_true + &eps;
        let data = RegressionData::new(
            y,
            DMatrix::from_column_slice(m, 1, x.as_slice()),
            (0..m).collect(),
            vec!["x".into()],
            None,
            None,
        )?;
        let fit = match ols_fit(Arc::new(data)) {
            Ok(f) => f,
            Err(_) => {
                // all-equal node draws make x identically zero; resample
                resampled += 1;
                continue;
            }
        };
        let bandwidth = match cfg.bandwidth {
            BandwidthRule::Fixed(b) => b,
            BandwidthRule::Auto => default_bandwidth(&prepared.net)?.max(f64::MIN_POSITIVE),
        };
        let serial = HacOptions { parallel: false };
        let estimates = [
            ehw_variance(&fit),
            dyadic_robust_variance(&fit, &prepared.net)?,
            network_hac_variance_with(&fit, &prepared.net, cfg.kernel, bandwidth, serial)?,
        ];
        let mut records = Vec::with_capacity(3);
        for est in estimates {
            let kind = est.kind;
            let (est, repaired) = ensure_psd(est, cfg.psd_epsilon)?;
            let (lo, hi) = confidence_interval(&fit, &est, 0, cfg.level)?;
            records.push(EstimatorRecord {
                kind,
                covered: lo <= cfg.beta_true && cfg.beta_true <= hi,
                ci_length: hi - lo,
                se: est.matrix[(0, 0)].max(0.0).sqrt(),
                psd_repaired: repaired,
            });
        }
        return Ok(ReplicationRecord {
            rep,
            beta_hat: fit.beta[0],
            resampled,
            estimators: [records[0], records[1], records[2]],
        });
    }
    Err(Error::MonteCarlo(format!(
        "replication {rep} degenerate after {MAX_ATTEMPTS} draws"
    )))
}

/// Runs one replication of the study; fully determined by
/// `(config.base_seed, rep)`.
pub fn run_replication(cfg: &McStudyConfig, rep: usize) -> Result<ReplicationRecord> {
    cfg.validate()?;
    let fixed = if cfg.fix_graph {
        Some(prepare_fixed_graph(cfg)?)
    } else {
        None
    };
    replication_inner(cfg, rep, fixed.as_ref())
}

/// Runs the full study and aggregates coverage, interval length, and
/// standard-error bias per estimator.
pub fn run_study(cfg: &McStudyConfig) -> Result<McTable> {
    run_study_with_records(cfg).map(|(table, _)| table)
}

/// [`run_study`] also returning the per-replication records (for export).
pub fn run_study_with_records(cfg: &McStudyConfig) -> Result<(McTable, Vec<ReplicationRecord>)> {
    cfg.validate()?;
    let fixed = if cfg.fix_graph {
        Some(prepare_fixed_graph(cfg)?)
    } else {
        None
    };
    let run_all = || -> Vec<Result<ReplicationRecord>> {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| replication_inner(cfg, rep, fixed.as_ref()))
            .collect()
    };
    let results = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::MonteCarlo(format!("thread pool: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    let mut records = Vec::with_capacity(cfg.reps);
    let mut failed = 0usize;
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(_) => failed += 1,
        }
    }
    if records.is_empty() {
        return Err(Error::MonteCarlo(format!(
            "all {} replications failed to produce a usable draw",
            cfg.reps
        )));
    }
    let n = records.len() as f64;
    let mean_beta = records.iter().map(|r| r.beta_hat).sum::<f64>() / n;
    let empirical_se = if records.len() > 1 {
        (records
            .iter()
            .map(|r| (r.beta_hat - mean_beta).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    } else {
        0.0
    };
    let rows = (0..3)
        .map(|e| {
            let kind = records[0].estimators[e].kind;
            let covered = records.iter().filter(|r| r.estimators[e].covered).count();
            let mean_len =
                records.iter().map(|r| r.estimators[e].ci_length).sum::<f64>() / n;
            let mean_se = records.iter().map(|r| r.estimators[e].se).sum::<f64>() / n;
            let repairs = records
                .iter()
                .filter(|r| r.estimators[e].psd_repaired)
                .count();
            McRow {
                kind,
                coverage: covered as f64 / n,
                avg_ci_length: mean_len,
                mean_se,
                bias_pct: if empirical_se > 0.0 {
                    (mean_se - empirical_se) / empirical_se * 100.0
                } else {
                    0.0
                },
                psd_repairs: repairs,
            }
        })
        .collect();
    let resampled =
        records.iter().map(|r| r.resampled as usize).sum::<usize>() + failed * MAX_ATTEMPTS as usize;
    Ok((
        McTable {
            rows,
            empirical_se,
            reps_completed: records.len(),
            reps_requested: cfg.reps,
            resampled,
            config: cfg.clone(),
        },
        records,
    ))
}
