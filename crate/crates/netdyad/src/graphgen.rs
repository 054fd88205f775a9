//! Seeded random graph generators.
//!
//! Two families are provided: Erdős–Rényi graphs where each of the `C(N,2)`
//! node pairs is kept independently with probability `λ/N`, and
//! Barabási–Albert preferential-attachment graphs grown from an Erdős–Rényi
//! seed component of `⌈5√N⌉`-ish size (the smallest integer strictly above
//! `5√N`), with each subsequent node attaching `ν` edges to existing nodes
//! drawn proportionally to degree.
//!
//! Generation is driven by a ChaCha8 stream cipher RNG: the same
//! [`GraphSpec`] always reproduces the same edge list, bit for bit, on any
//! platform. Each structural phase of a build (seed component, attachment)
//! consumes its own ChaCha stream so that phases cannot bleed into one
//! another; [`phase_rng`] documents the rule and is reused by the Monte
//! Carlo driver with its own stream ids.

use crate::dyad::{NodeGraph, NodeId};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Graph families used by the simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Preferential attachment with `param = ν` edges per new node.
    BarabasiAlbert,
    /// Independent edges with probability `param / n_nodes`.
    ErdosRenyi,
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::BarabasiAlbert => write!(f, "ba"),
            GraphKind::ErdosRenyi => write!(f, "er"),
        }
    }
}

/// Full specification of one random graph draw.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub n_nodes: usize,
    /// `ν` (edges per new node, integer-valued) for Barabási–Albert,
    /// `λ` (expected-degree scale) for Erdős–Rényi.
    pub param: f64,
    pub seed: u64,
    /// Expected-degree scale of the Erdős–Rényi seed component of a
    /// Barabási–Albert build. Ignored for Erdős–Rényi graphs.
    pub seed_lambda: f64,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, n_nodes: usize, param: f64, seed: u64) -> Self {
        GraphSpec {
            kind,
            n_nodes,
            param,
            seed,
            seed_lambda: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.param.is_finite() {
            return Err(Error::InvalidSpec("param must be finite".into()));
        }
        match self.kind {
            GraphKind::ErdosRenyi => {
                if self.param <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "erdos-renyi lambda must be positive, got {}",
                        self.param
                    )));
                }
                if self.n_nodes == 0 {
                    return Err(Error::InvalidSpec("n_nodes must be positive".into()));
                }
                if self.param / self.n_nodes as f64 > 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "edge probability lambda/N = {} exceeds 1",
                        self.param / self.n_nodes as f64
                    )));
                }
            }
            GraphKind::BarabasiAlbert => {
                if self.param < 1.0 || self.param.fract() != 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "barabasi-albert nu must be an integer >= 1, got {}",
                        self.param
                    )));
                }
                let n_seed = ba_seed_size(self.n_nodes);
                if self.n_nodes <= n_seed {
                    return Err(Error::InvalidSpec(format!(
                        "n_nodes = {} leaves no nodes to attach beyond the seed component of {}",
                        self.n_nodes, n_seed
                    )));
                }
                if self.param as usize >= n_seed {
                    return Err(Error::InvalidSpec(format!(
                        "nu = {} must be smaller than the seed component size {}",
                        self.param, n_seed
                    )));
                }
                if self.seed_lambda <= 0.0 || self.seed_lambda / n_seed as f64 > 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "seed_lambda = {} invalid for seed component size {}",
                        self.seed_lambda, n_seed
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Structural phases of a graph build, each on its own RNG stream.
#[derive(Debug, Clone, Copy)]
pub enum GenPhase {
    /// Erdős–Rényi edge draws (the whole build, or the BA seed component).
    EdgeDraws = 0,
    /// Preferential-attachment target draws.
    Attachment = 1,
}

/// ChaCha8 stream for one structural phase of the build keyed by `seed`.
pub fn phase_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws a graph per `spec`, dispatching on the family.
pub fn generate(spec: &GraphSpec) -> Result<NodeGraph> {
    match spec.kind {
        GraphKind::ErdosRenyi => erdos_renyi(spec),
        GraphKind::BarabasiAlbert => barabasi_albert(spec),
    }
}

/// Erdős–Rényi draw: every node pair kept with probability `λ/N`.
pub fn erdos_renyi(spec: &GraphSpec) -> Result<NodeGraph> {
    if spec.kind != GraphKind::ErdosRenyi {
        return Err(Error::InvalidSpec("spec kind is not erdos_renyi".into()));
    }
    spec.validate()?;
    let mut rng = phase_rng(spec.seed, GenPhase::EdgeDraws as u64);
    sample_erdos_renyi(spec.n_nodes, spec.param / spec.n_nodes as f64, &mut rng)
}

/// Barabási–Albert draw: Erdős–Rényi seed component, then degree-proportional
/// attachment of `ν` edges per new node (targets without replacement).
pub fn barabasi_albert(spec: &GraphSpec) -> Result<NodeGraph> {
    if spec.kind != GraphKind::BarabasiAlbert {
        return Err(Error::InvalidSpec("spec kind is not barabasi_albert".into()));
    }
    spec.validate()?;
    let mut seed_rng = phase_rng(spec.seed, GenPhase::EdgeDraws as u64);
    let mut attach_rng = phase_rng(spec.seed, GenPhase::Attachment as u64);
    sample_barabasi_albert(
        spec.n_nodes,
        spec.param as usize,
        spec.seed_lambda,
        &mut seed_rng,
        &mut attach_rng,
    )
}

/// Seed-component size: the smallest integer strictly above `5√N`.
pub fn ba_seed_size(n_nodes: usize) -> usize {
    (5.0 * (n_nodes as f64).sqrt()).floor() as usize + 1
}

/// Bernoulli edge process over the `C(n,2)` pairs with inclusion
/// probability `p`, visiting pairs in lexicographic order.
///
/// Uses geometric skips between successes so the cost is proportional to the
/// number of edges drawn rather than the number of candidate pairs.
pub fn sample_erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Result<NodeGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidSpec(format!("edge probability {p} outside [0,1]")));
    }
    let total = n * n.saturating_sub(1) / 2;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    if p >= 1.0 {
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        return NodeGraph::new(n, edges);
    }
    if p > 0.0 {
        let log_q = (1.0 - p).ln();
        let mut t: usize = 0;
        loop {
            let u: f64 = rng.random();
            let skip = ((1.0 - u).ln() / log_q).floor();
            if !skip.is_finite() || skip >= (total - t) as f64 {
                break;
            }
            t += skip as usize;
            edges.push(pair_from_rank(n, t));
            t += 1;
            if t >= total {
                break;
            }
        }
    }
    NodeGraph::new(n, edges)
}

/// Inverse of the lexicographic pair ranking: rank `t` in `[0, C(n,2))`
/// maps to the `t`-th pair `(i,j)`, `i < j`.
fn pair_from_rank(n: usize, t: usize) -> (NodeId, NodeId) {
    // offset(i) = number of pairs with first coordinate < i
    let offset = |i: usize| i * (2 * n - i - 1) / 2;
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if offset(mid) <= t {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let i = lo;
    let j = i + 1 + (t - offset(i));
    (i, j)
}

/// Preferential-attachment growth over an existing seed component.
pub fn sample_barabasi_albert(
    n: usize,
    nu: usize,
    seed_lambda: f64,
    seed_rng: &mut impl Rng,
    attach_rng: &mut impl Rng,
) -> Result<NodeGraph> {
    let n_seed = ba_seed_size(n);
    if n <= n_seed {
        return Err(Error::InvalidSpec(format!(
            "n_nodes = {n} leaves no nodes to attach beyond the seed component of {n_seed}"
        )));
    }
    if nu == 0 || nu >= n_seed {
        return Err(Error::InvalidSpec(format!(
            "nu = {nu} must be in [1, seed component size {n_seed})"
        )));
    }
    let seed_graph = sample_erdos_renyi(n_seed, seed_lambda / n_seed as f64, seed_rng)?;
    let mut edges: Vec<(NodeId, NodeId)> = seed_graph.edges().to_vec();
    let mut degree = vec![0usize; n];
    // One entry per degree unit; sampling an entry uniformly is
    // degree-proportional sampling over nodes.
    let mut degree_list: Vec<NodeId> = Vec::with_capacity(2 * (edges.len() + nu * (n - n_seed)));
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
        degree_list.push(u);
        degree_list.push(v);
    }
    let mut positive = (0..n_seed).filter(|&v| degree[v] > 0).count();

    let mut chosen: Vec<NodeId> = Vec::with_capacity(nu);
    for new_node in n_seed..n {
        chosen.clear();
        let mut chosen_positive = 0usize;
        while chosen.len() < nu {
            // Fall back to uniform sampling once every positive-degree node
            // is already a target (e.g. a near-empty seed component).
            let target = if positive > chosen_positive && !degree_list.is_empty() {
                degree_list[attach_rng.random_range(0..degree_list.len())]
            } else {
                attach_rng.random_range(0..new_node)
            };
            if chosen.contains(&target) {
                continue;
            }
            if degree[target] > 0 {
                chosen_positive += 1;
            }
            chosen.push(target);
        }
        for &target in &chosen {
            edges.push((target.min(new_node), target.max(new_node)));
            if degree[target] == 0 {
                positive += 1;
            }
            degree[target] += 1;
            degree_list.push(target);
        }
        degree[new_node] = nu;
        positive += 1;
        degree_list.extend(std::iter::repeat(new_node).take(nu));
    }
    NodeGraph::new(n, edges)
}
