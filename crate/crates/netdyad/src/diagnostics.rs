//! Denseness measures of the dyad network.
//!
//! Consistency of the network-HAC estimator rests on the network not growing
//! too dense. Two families of measures screen this in finite samples:
//!
//! ```text
//! δ∂(s;k) = (1/M) Σ_m |shell(m;s)|^k
//! Δ(s,r;k) = (1/M) Σ_m max_{m' ∈ shell(m;s)} |nbhd(m;r) \ nbhd(m';s−1)|^k
//! c(s,r;k) = inf_{α>1} Δ(s,r;kα)^{1/α} · δ∂(s; α/(α−1))^{(α−1)/α}
//! ```
//!
//! with `nbhd(m;−1) = ∅`, and the maximum over an empty shell contributing
//! zero for that dyad. The summary quantities are `Σ_s δ∂(s;1)` (bounded
//! total shell density) and `(1/M)·Σ_s c(s,b;2)` at the estimation bandwidth
//! `b` (vanishing composite density); both are tabulated by
//! [`denseness_report`] as finite-sample screening, with shell sums
//! truncated at the network diameter.
//!
//! The infimum over `α` is approximated on a fixed grid
//! ([`default_alpha_grid`]) so reports are reproducible.
//!
//! Exact evaluation of `Δ` runs one truncated BFS per shell member per
//! source dyad, so reports are quadratic-ish in dense components; cap the
//! shell radius on large networks.

use crate::dyad::{BfsScratch, DyadId, DyadNetwork};
use crate::error::{Error, Result};
use rayon::prelude::*;

/// 40 grid points log-spaced on `[1.01, 8]`.
pub fn default_alpha_grid() -> Vec<f64> {
    let n = 40;
    let (lo, hi) = (1.01f64.ln(), 8f64.ln());
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Average shell size raised to `k`: `δ∂(s;k)`.
pub fn shell_density(net: &DyadNetwork, s: usize, k: f64) -> f64 {
    let m = net.n_dyads();
    if m == 0 {
        return 0.0;
    }
    let sizes = shell_sizes(net, s);
    sizes.iter().map(|&n| (n as f64).powf(k)).sum::<f64>() / m as f64
}

/// Average (over dyads) of the maximal neighborhood difference raised to
/// `k`: `Δ(s,r;k)`.
pub fn delta_density(net: &DyadNetwork, s: usize, r: usize, k: f64) -> f64 {
    let m = net.n_dyads();
    if m == 0 {
        return 0.0;
    }
    let diffs = max_neighborhood_diffs(net, s, r);
    diffs
        .iter()
        .map(|d| match d {
            Some(n) => (*n as f64).powf(k),
            None => 0.0,
        })
        .sum::<f64>()
        / m as f64
}

/// Grid approximation of the composite density `c(s,r;k)`.
pub fn composite_density(
    net: &DyadNetwork,
    s: usize,
    r: usize,
    k: f64,
    alpha_grid: &[f64],
) -> Result<f64> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidVariance("alpha grid must be nonempty".into()));
    }
    if let Some(bad) = alpha_grid.iter().find(|&&a| !(a > 1.0)) {
        return Err(Error::InvalidVariance(format!(
            "alpha grid values must exceed 1, got {bad}"
        )));
    }
    let sizes = shell_sizes(net, s);
    let diffs = max_neighborhood_diffs(net, s, r);
    Ok(composite_from_parts(&sizes, &diffs, k, alpha_grid))
}

fn composite_from_parts(
    shell_sizes: &[usize],
    diffs: &[Option<usize>],
    k: f64,
    alpha_grid: &[f64],
) -> f64 {
    let m = shell_sizes.len();
    if m == 0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for &alpha in alpha_grid {
        let delta = diffs
            .iter()
            .map(|d| match d {
                Some(n) => (*n as f64).powf(k * alpha),
                None => 0.0,
            })
            .sum::<f64>()
            / m as f64;
        let q = alpha / (alpha - 1.0);
        let shell = shell_sizes
            .iter()
            .map(|&n| (n as f64).powf(q))
            .sum::<f64>()
            / m as f64;
        let value = delta.powf(1.0 / alpha) * shell.powf((alpha - 1.0) / alpha);
        best = best.min(value);
    }
    best
}

/// Per-radius density table plus the summary sums screening the denseness
/// conditions behind estimator consistency.
#[derive(Debug, Clone, PartialEq)]
pub struct DensenessReport {
    pub rows: Vec<DensenessRow>,
    /// Bandwidth the composite columns were evaluated at.
    pub bandwidth: f64,
    /// Neighborhood radius `r = ⌊bandwidth⌋` used in `Δ` and `c`.
    pub radius: usize,
    /// Largest radius tabulated (the diameter unless capped).
    pub max_s: usize,
    /// Diameter of the dyad network (largest finite eccentricity).
    pub diameter: usize,
    /// `Σ_s δ∂(s;1)` over the tabulated radii.
    pub shell_density_sum: f64,
    /// `(1/M)·Σ_s c(s,b;2)` over the tabulated radii.
    pub composite_mean_sum: f64,
    pub alpha_grid: Vec<f64>,
}

/// One radius of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct DensenessRow {
    pub s: usize,
    /// `δ∂(s;1)`
    pub shell_density: f64,
    /// `Δ(s,⌊b⌋;2)`
    pub delta_density: f64,
    /// `c(s,⌊b⌋;2)` on the α grid
    pub composite: f64,
}

/// Tabulates the density measures at `bandwidth`, truncating shells at the
/// network diameter or at `max_s` when given.
pub fn denseness_report(
    net: &DyadNetwork,
    bandwidth: f64,
    max_s: Option<usize>,
) -> Result<DensenessReport> {
    if !bandwidth.is_finite() || bandwidth < 0.0 {
        return Err(Error::InvalidVariance(format!(
            "bandwidth must be a nonnegative real, got {bandwidth}"
        )));
    }
    let m = net.n_dyads();
    if m == 0 {
        return Err(Error::InvalidVariance("network has no dyads".into()));
    }
    let diameter = (0..m)
        .into_par_iter()
        .map_init(
            || BfsScratch::new(m),
            |scratch, d| net.eccentricity(d, scratch).expect("valid id"),
        )
        .reduce(|| 0, usize::max);
    let cap = max_s.unwrap_or(diameter).min(diameter);
    let radius = bandwidth.floor() as usize;
    let grid = default_alpha_grid();
    let mut rows = Vec::with_capacity(cap + 1);
    for s in 0..=cap {
        let sizes = shell_sizes(net, s);
        let diffs = max_neighborhood_diffs(net, s, radius);
        let shell =
            sizes.iter().map(|&n| n as f64).sum::<f64>() / m as f64;
        let delta = diffs
            .iter()
            .map(|d| d.map(|n| (n as f64).powi(2)).unwrap_or(0.0))
            .sum::<f64>()
            / m as f64;
        let composite = composite_from_parts(&sizes, &diffs, 2.0, &grid);
        rows.push(DensenessRow {
            s,
            shell_density: shell,
            delta_density: delta,
            composite,
        });
    }
    let shell_density_sum = rows.iter().map(|r| r.shell_density).sum();
    let composite_mean_sum = rows.iter().map(|r| r.composite).sum::<f64>() / m as f64;
    Ok(DensenessReport {
        rows,
        bandwidth,
        radius,
        max_s: cap,
        diameter,
        shell_density_sum,
        composite_mean_sum,
        alpha_grid: grid,
    })
}

/// `|shell(m;s)|` for every dyad, via truncated BFS.
fn shell_sizes(net: &DyadNetwork, s: usize) -> Vec<usize> {
    let m = net.n_dyads();
    (0..m)
        .into_par_iter()
        .map_init(
            || BfsScratch::new(m),
            |scratch, d| {
                let mut size = 0;
                net.for_each_shell(d, s, scratch, |radius, shell| {
                    if radius == s {
                        size = shell.len();
                    }
                })
                .expect("valid id");
                size
            },
        )
        .collect()
}

/// For every dyad `m`, `max_{m' ∈ shell(m;s)} |nbhd(m;r) \ nbhd(m';s−1)|`,
/// or `None` when the shell is empty.
fn max_neighborhood_diffs(net: &DyadNetwork, s: usize, r: usize) -> Vec<Option<usize>> {
    let m = net.n_dyads();
    (0..m)
        .into_par_iter()
        .map_init(
            || DiffScratch::new(m),
            |scratch, d| scratch.max_diff(net, d, s, r),
        )
        .collect()
}

struct DiffScratch {
    bfs: BfsScratch,
    inner: BfsScratch,
    mark: Vec<u64>,
    epoch: u64,
    shell: Vec<DyadId>,
}

impl DiffScratch {
    fn new(m: usize) -> Self {
        DiffScratch {
            bfs: BfsScratch::new(m),
            inner: BfsScratch::new(m),
            mark: vec![0; m],
            epoch: 0,
            shell: Vec::new(),
        }
    }

    fn max_diff(&mut self, net: &DyadNetwork, d: DyadId, s: usize, r: usize) -> Option<usize> {
        self.shell.clear();
        let shell_buf = &mut self.shell;
        net.for_each_shell(d, s, &mut self.bfs, |radius, members| {
            if radius == s {
                shell_buf.extend_from_slice(members);
            }
        })
        .expect("valid id");
        if self.shell.is_empty() {
            return None;
        }
        // mark nbhd(d; r)
        self.epoch += 1;
        let epoch = self.epoch;
        let mark = &mut self.mark;
        let mut nbhd_size = 0usize;
        net.for_each_shell(d, r, &mut self.bfs, |_, members| {
            for &x in members {
                mark[x] = epoch;
                nbhd_size += 1;
            }
        })
        .expect("valid id");
        let mut best = 0usize;
        for i in 0..self.shell.len() {
            let other = self.shell[i];
            let overlap = if s == 0 {
                0 // nbhd(m'; −1) = ∅
            } else {
                let mark = &self.mark;
                let mut count = 0usize;
                net.for_each_shell(other, s - 1, &mut self.inner, |_, members| {
                    count += members.iter().filter(|&&x| mark[x] == epoch).count();
                })
                .expect("valid id");
                count
            };
            best = best.max(nbhd_size - overlap);
        }
        Some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyad::{build_dyad_index, build_dyad_network, NodeGraph};
    use approx::assert_relative_eq;

    fn k3_dyad_net() -> DyadNetwork {
        let g = NodeGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        build_dyad_network(build_dyad_index(&g))
    }

    fn isolated_dyads(n_pairs: usize) -> DyadNetwork {
        let edges: Vec<(usize, usize)> = (0..n_pairs).map(|i| (2 * i, 2 * i + 1)).collect();
        build_dyad_network(build_dyad_index(&NodeGraph::new(2 * n_pairs, edges).unwrap()))
    }

    #[test]
    fn shell_density_trivia() {
        let net = k3_dyad_net();
        assert_eq!(shell_density(&net, 0, 3.7), 1.0);
        assert_eq!(shell_density(&net, 1, 1.0), 2.0);
        assert_eq!(shell_density(&isolated_dyads(4), 1, 2.0), 0.0);
    }

    #[test]
    fn delta_density_trivia() {
        let net = k3_dyad_net();
        // s = 0: term is |nbhd(m;r)|^k
        assert_eq!(delta_density(&net, 0, 1, 1.0), 3.0);
        // empty shells contribute zero
        assert_eq!(delta_density(&isolated_dyads(3), 1, 2, 1.0), 0.0);
    }

    #[test]
    fn composite_single_alpha_is_the_formula() {
        let net = k3_dyad_net();
        let (s, r, k) = (1, 1, 1.0);
        let c = composite_density(&net, s, r, k, &[2.0]).unwrap();
        let expect = delta_density(&net, s, r, 2.0 * k).sqrt() * shell_density(&net, s, 2.0).sqrt();
        assert_relative_eq!(c, expect, epsilon = 1e-12);
        assert!(composite_density(&net, s, r, k, &[]).is_err());
        assert!(composite_density(&net, s, r, k, &[0.5]).is_err());
    }

    #[test]
    fn composite_one_when_both_measures_one() {
        // a single dyad: shell(0)={m} and nbhd(m;r)={m} for any r
        let net = isolated_dyads(1);
        let c = composite_density(&net, 0, 3, 1.0, &default_alpha_grid()).unwrap();
        assert_relative_eq!(c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn report_on_k3() {
        let net = k3_dyad_net();
        let report = denseness_report(&net, 1.0, None).unwrap();
        assert_eq!(report.diameter, 1);
        let profile: Vec<f64> = report.rows.iter().map(|r| r.shell_density).collect();
        assert_eq!(profile, vec![1.0, 2.0]);
        assert_relative_eq!(report.shell_density_sum, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn report_on_isolated_dyads() {
        let net = isolated_dyads(5);
        let report = denseness_report(&net, 2.0, None).unwrap();
        assert_relative_eq!(report.shell_density_sum, 1.0, epsilon = 1e-12);
        // only the s = 0 composite term survives, and it equals 1
        assert_relative_eq!(
            report.composite_mean_sum,
            1.0 / net.n_dyads() as f64,
            epsilon = 1e-12
        );
    }

    #[test]
    fn shell_sum_equals_average_component_size() {
        // path component of 3 dyads plus an isolated dyad
        let g = NodeGraph::new(6, [(0, 1), (1, 2), (2, 3), (4, 5)]).unwrap();
        let net = build_dyad_network(build_dyad_index(&g));
        let report = denseness_report(&net, 2.0, None).unwrap();
        // components: {3 dyads} ×3 rows + {1 dyad} ×1 row → (3+3+3+1)/4
        assert_relative_eq!(report.shell_density_sum, 10.0 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn shell_density_nondecreasing_in_k_when_shells_nonempty() {
        let net = k3_dyad_net();
        let a = shell_density(&net, 1, 1.0);
        let b = shell_density(&net, 1, 2.0);
        assert!(b >= a);
    }

    #[test]
    fn composite_never_exceeds_single_alpha_values() {
        let g = NodeGraph::new(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 4)]).unwrap();
        let net = build_dyad_network(build_dyad_index(&g));
        let grid = default_alpha_grid();
        let c = composite_density(&net, 1, 2, 1.0, &grid).unwrap();
        for &alpha in &grid {
            let single = composite_density(&net, 1, 2, 1.0, &[alpha]).unwrap();
            assert!(c <= single + 1e-12);
        }
    }

    #[test]
    fn relabeling_nodes_leaves_measures_unchanged() {
        let edges_a = vec![(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)];
        // relabel via permutation 0->3, 1->0, 2->2, 3->1
        let p = [3usize, 0, 2, 1];
        let edges_b: Vec<(usize, usize)> = edges_a.iter().map(|&(u, v)| (p[u], p[v])).collect();
        let net_a = build_dyad_network(build_dyad_index(&NodeGraph::new(4, edges_a).unwrap()));
        let net_b = build_dyad_network(build_dyad_index(&NodeGraph::new(4, edges_b).unwrap()));
        for s in 0..3 {
            assert_relative_eq!(
                shell_density(&net_a, s, 2.0),
                shell_density(&net_b, s, 2.0),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                delta_density(&net_a, s, 2, 1.5),
                delta_density(&net_b, s, 2, 1.5),
                epsilon = 1e-12
            );
        }
    }
}
