//! Shared oracles for the integration and acceptance suites.
//!
//! Everything here recomputes quantities through an independent route:
//! all-pairs distances by Floyd–Warshall on the dyad adjacency, variance
//! matrices by the naive double sum over dyad pairs, and neighborhoods by
//! direct enumeration from the distance matrix. None of it shares code with
//! the shell-wise implementations under test.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use netdyad::dyad::{build_dyad_index, build_dyad_network, DyadNetwork, NodeGraph};
use netdyad::regression::{ols_fit, OlsFit, RegressionData};
use netdyad::variance::Kernel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// All-pairs geodesic distances on the dyad network; `None` = disconnected.
pub fn floyd_warshall(net: &DyadNetwork) -> Vec<Vec<Option<usize>>> {
    let m = net.n_dyads();
    let mut dist = vec![vec![None; m]; m];
    for d in 0..m {
        dist[d][d] = Some(0);
        for &n in net.adjacency(d).unwrap() {
            dist[d][n] = Some(1);
        }
    }
    for k in 0..m {
        for i in 0..m {
            if let Some(a) = dist[i][k] {
                for j in 0..m {
                    if let Some(b) = dist[k][j] {
                        if dist[i][j].is_none_or(|c| a + b < c) {
                            dist[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
    }
    dist
}

/// Dyads at distance exactly `s` from `m`, from the oracle distances.
pub fn oracle_shell(dist: &[Vec<Option<usize>>], m: usize, s: usize) -> Vec<usize> {
    (0..dist.len()).filter(|&d| dist[m][d] == Some(s)).collect()
}

/// Dyads at distance at most `r` from `m`, from the oracle distances.
pub fn oracle_neighborhood(dist: &[Vec<Option<usize>>], m: usize, r: usize) -> Vec<usize> {
    (0..dist.len())
        .filter(|&d| dist[m][d].is_some_and(|v| v <= r))
        .collect()
}

/// Pair weight of the naive double sum for each estimator.
pub enum OracleWeight {
    Ehw,
    Dyadic,
    Kernel(Kernel, f64),
}

/// The naive `O(M²)` sandwich: `bread · Σ_m Σ_m' w(ρ) ŝ_m ŝ_m'' · bread`,
/// using oracle distances, with disconnected pairs contributing zero.
pub fn brute_force_variance(
    fit: &OlsFit,
    dist: &[Vec<Option<usize>>],
    weight: OracleWeight,
) -> DMatrix<f64> {
    let m = dist.len();
    let k = fit.scores.ncols();
    let mut row_of = vec![usize::MAX; m];
    for (r, &d) in fit.data.dyad_ids.iter().enumerate() {
        row_of[d] = r;
    }
    let score = |d: usize| -> DVector<f64> { fit.scores.row(row_of[d]).transpose() };
    let mut meat = DMatrix::zeros(k, k);
    for a in 0..m {
        for b in 0..m {
            let w = match (&weight, dist[a][b]) {
                (_, None) => 0.0,
                (OracleWeight::Ehw, Some(s)) => f64::from(u8::from(s == 0)),
                (OracleWeight::Dyadic, Some(s)) => f64::from(u8::from(s <= 1)),
                (OracleWeight::Kernel(kernel, bandwidth), Some(s)) => {
                    kernel.weight(s as f64 / bandwidth)
                }
            };
            if w != 0.0 {
                meat += w * score(a) * score(b).transpose();
            }
        }
    }
    &fit.bread * meat * &fit.bread
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = a.norm().max(b.norm());
    if denom == 0.0 {
        return (a - b).norm();
    }
    (a - b).norm() / denom
}

/// Random simple graph with a dyad count in `[min_dyads, max_dyads]`
/// (resampled until the bounds hold).
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    max_nodes: usize,
    min_dyads: usize,
    max_dyads: usize,
) -> NodeGraph {
    loop {
        let n = rng.random_range(2..=max_nodes);
        let p = 0.05 + rng.random::<f64>() * 0.45;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        if edges.len() < min_dyads.max(1) || edges.len() > max_dyads {
            continue;
        }
        return NodeGraph::new(n, edges).unwrap();
    }
}

/// A fitted regression over the dyads of `g` with `k` covariates and noisy
/// linear outcomes.
pub fn random_fit(g: &NodeGraph, k: usize, rng: &mut ChaCha8Rng) -> (OlsFit, DyadNetwork) {
    let net = build_dyad_network(build_dyad_index(g));
    let m = net.n_dyads();
    let x = DMatrix::from_fn(m, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let y = DVector::from_fn(m, |r, _| {
        x.row(r).iter().sum::<f64>() + rng.random::<f64>() * 2.0 - 1.0
    });
    let names = (0..k).map(|c| format!("x{c}")).collect();
    let data = RegressionData::new(y, x, (0..m).collect(), names, None, None).unwrap();
    (ols_fit(Arc::new(data)).unwrap(), net)
}
