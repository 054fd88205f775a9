//! Networks over dyads.
//!
//! Observations are *dyads*: unordered pairs of sampling units that are
//! linked in an individual-level network. Two dyads are adjacent when they
//! share a unit, which turns the edge set of the individual network into a
//! graph of its own (the line graph). Geodesic distances on that graph drive
//! both the variance estimators and the denseness diagnostics, so this module
//! provides the dyad enumeration, the adjacency structure, and truncated
//! breadth-first searches that enumerate distance shells around a dyad.
//!
//! All structures are immutable after construction and safe to share across
//! worker threads; BFS scratch space is per-call or per-worker.

use crate::error::{Error, Result};
use std::collections::HashMap;

/// Index of a sampling unit (node) in `[0, n_nodes)`.
pub type NodeId = usize;
/// Index of an active dyad in `[0, M)`.
pub type DyadId = usize;

/// Undirected simple graph over the sampling units.
///
/// Edges are stored canonically as `(min, max)` pairs sorted
/// lexicographically, so equal graphs compare equal regardless of the
/// order in which edges were supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeGraph {
    n_nodes: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl NodeGraph {
    /// Builds a graph, validating the simple-graph invariants.
    ///
    /// Self-loops, duplicate edges (in either orientation), and out-of-range
    /// node ids are rejected with the offending pair named.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut canon: Vec<(NodeId, NodeId)> = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop ({u},{v})")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) references a node outside [0,{n_nodes})"
                )));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({},{})",
                w[0].0, w[0].1
            )));
        }
        Ok(NodeGraph {
            n_nodes,
            edges: canon,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonically ordered edge list.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Degree of every node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Average node degree, `2 * edges / nodes`.
    pub fn average_degree(&self) -> f64 {
        if self.n_nodes == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.n_nodes as f64
        }
    }
}

/// Enumeration of the active dyads of a [`NodeGraph`].
///
/// Dyad ids are assigned in canonical `(min node, max node)` order, giving a
/// bijection between ids `0..M` and the edge set that is stable across runs.
#[derive(Debug, Clone)]
pub struct DyadIndex {
    dyads: Vec<(NodeId, NodeId)>,
    ids: HashMap<(NodeId, NodeId), DyadId>,
    n_nodes: usize,
}

/// One dyad per edge of `g`, in canonical order.
pub fn build_dyad_index(g: &NodeGraph) -> DyadIndex {
    let dyads = g.edges().to_vec();
    let ids = dyads
        .iter()
        .enumerate()
        .map(|(m, &pair)| (pair, m))
        .collect();
    DyadIndex {
        dyads,
        ids,
        n_nodes: g.n_nodes(),
    }
}

impl DyadIndex {
    /// Number of active dyads, `M`.
    pub fn len(&self) -> usize {
        self.dyads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dyads.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// The node pair of dyad `m`.
    pub fn pair(&self, m: DyadId) -> Result<(NodeId, NodeId)> {
        self.dyads
            .get(m)
            .copied()
            .ok_or_else(|| Error::InvalidId(format!("dyad id {m} out of range 0..{}", self.len())))
    }

    /// Looks up the dyad id of an unordered node pair.
    pub fn id(&self, u: NodeId, v: NodeId) -> Option<DyadId> {
        self.ids.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn pairs(&self) -> &[(NodeId, NodeId)] {
        &self.dyads
    }
}

/// Geodesic distance between two dyads on the dyad network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DyadDistance {
    /// Exact distance; `Finite(0)` iff the two ids coincide,
    /// `Finite(1)` iff the dyads are adjacent.
    Finite(usize),
    /// No chain of adjacent dyads joins the two.
    Disconnected,
    /// The search was truncated: the distance exceeds the requested cap
    /// but the dyads may still be connected.
    BeyondCap,
}

impl DyadDistance {
    pub fn finite(self) -> Option<usize> {
        match self {
            DyadDistance::Finite(d) => Some(d),
            _ => None,
        }
    }
}

/// The network over active dyads: vertices are dyads, edges join dyads that
/// share a sampling unit.
///
/// Adjacency lists are sorted; for a node of degree `d` in the underlying
/// graph, all `C(d,2)` dyad pairs through that node are adjacent, so
/// construction costs the sum of `C(degree,2)` over nodes.
#[derive(Debug, Clone)]
pub struct DyadNetwork {
    index: DyadIndex,
    adj: Vec<Vec<DyadId>>,
}

/// Builds the adjacency structure over dyads from a dyad enumeration.
pub fn build_dyad_network(index: DyadIndex) -> DyadNetwork {
    let m = index.len();
    // Incident dyads per node, in dyad-id order.
    let mut incident: Vec<Vec<DyadId>> = vec![Vec::new(); index.n_nodes()];
    for (d, &(u, v)) in index.pairs().iter().enumerate() {
        incident[u].push(d);
        incident[v].push(d);
    }
    let mut adj: Vec<Vec<DyadId>> = vec![Vec::new(); m];
    for dyads in &incident {
        for (i, &a) in dyads.iter().enumerate() {
            for &b in &dyads[i + 1..] {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    // In a simple graph two distinct dyads share at most one node, so no pair
    // is inserted twice; sort anyway for a canonical order.
    for list in &mut adj {
        list.sort_unstable();
    }
    DyadNetwork { index, adj }
}

impl DyadNetwork {
    pub fn n_dyads(&self) -> usize {
        self.index.len()
    }

    pub fn index(&self) -> &DyadIndex {
        &self.index
    }

    /// Dyads adjacent to `m` (distance exactly one), sorted.
    pub fn adjacency(&self, m: DyadId) -> Result<&[DyadId]> {
        self.adj
            .get(m)
            .map(|v| v.as_slice())
            .ok_or_else(|| self.bad_id(m))
    }

    pub fn degree(&self, m: DyadId) -> Result<usize> {
        Ok(self.adjacency(m)?.len())
    }

    /// Average degree of the dyad network (the bandwidth rule input).
    pub fn average_degree(&self) -> f64 {
        if self.adj.is_empty() {
            0.0
        } else {
            self.adj.iter().map(|a| a.len()).sum::<usize>() as f64 / self.adj.len() as f64
        }
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    fn bad_id(&self, m: DyadId) -> Error {
        Error::InvalidId(format!("dyad id {m} out of range 0..{}", self.n_dyads()))
    }

    /// Geodesic distance between dyads `m` and `m2`, truncated at `cap`.
    ///
    /// BFS stops as soon as the target is found or the frontier passes `cap`.
    pub fn dyad_distance(&self, m: DyadId, m2: DyadId, cap: usize) -> Result<DyadDistance> {
        if m >= self.n_dyads() {
            return Err(self.bad_id(m));
        }
        if m2 >= self.n_dyads() {
            return Err(self.bad_id(m2));
        }
        let mut scratch = BfsScratch::new(self.n_dyads());
        let mut found = None;
        let mut truncated = false;
        self.for_each_shell(m, cap, &mut scratch, |s, shell| {
            if shell.contains(&m2) {
                found = Some(s);
            }
            if s == cap && !shell.is_empty() {
                // Anything unreached may still lie past the cap.
                truncated = true;
            }
        })?;
        Ok(match found {
            Some(d) => DyadDistance::Finite(d),
            None if truncated => DyadDistance::BeyondCap,
            None => DyadDistance::Disconnected,
        })
    }

    /// Distance shells around `m` up to radius `s_max`.
    ///
    /// `shells[0] == [m]`, `shells[s]` holds exactly the dyads at distance
    /// `s`; the shells partition the radius-`s_max` neighborhood. Trailing
    /// shells are empty when the component is exhausted early.
    pub fn shells_up_to(&self, m: DyadId, s_max: usize) -> Result<Vec<Vec<DyadId>>> {
        let mut scratch = BfsScratch::new(self.n_dyads());
        let mut shells = vec![Vec::new(); s_max + 1];
        self.for_each_shell(m, s_max, &mut scratch, |s, shell| {
            shells[s] = shell.to_vec();
        })?;
        Ok(shells)
    }

    /// Walks the BFS shells around `source`, calling `visit(s, shell)` for
    /// `s = 0..=cap` while shells remain nonempty. Shell slices are in BFS
    /// order: shell 1 is exactly the adjacency list of `source`.
    ///
    /// This is the hot path shared by the variance estimators, the
    /// diagnostics, and the error-spillover simulator.
    pub fn for_each_shell<F>(
        &self,
        source: DyadId,
        cap: usize,
        scratch: &mut BfsScratch,
        mut visit: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &[DyadId]),
    {
        if source >= self.n_dyads() {
            return Err(self.bad_id(source));
        }
        debug_assert_eq!(scratch.mark.len(), self.n_dyads());
        scratch.epoch += 1;
        let epoch = scratch.epoch;
        scratch.frontier.clear();
        scratch.next.clear();
        scratch.frontier.push(source);
        scratch.mark[source] = epoch;
        let mut s = 0;
        loop {
            visit(s, &scratch.frontier);
            if s == cap {
                break;
            }
            scratch.next.clear();
            for &d in &scratch.frontier {
                for &n in &self.adj[d] {
                    if scratch.mark[n] != epoch {
                        scratch.mark[n] = epoch;
                        scratch.next.push(n);
                    }
                }
            }
            if scratch.next.is_empty() {
                break;
            }
            std::mem::swap(&mut scratch.frontier, &mut scratch.next);
            s += 1;
        }
        Ok(())
    }

    /// Eccentricity of `m`: the largest finite distance from `m`.
    pub fn eccentricity(&self, m: DyadId, scratch: &mut BfsScratch) -> Result<usize> {
        let mut ecc = 0;
        self.for_each_shell(m, usize::MAX, scratch, |s, shell| {
            if !shell.is_empty() {
                ecc = s;
            }
        })?;
        Ok(ecc)
    }
}

/// Reusable BFS workspace. One per call or per worker thread; never shared.
#[derive(Debug)]
pub struct BfsScratch {
    mark: Vec<u64>,
    epoch: u64,
    frontier: Vec<DyadId>,
    next: Vec<DyadId>,
}

impl BfsScratch {
    pub fn new(n_dyads: usize) -> Self {
        BfsScratch {
            mark: vec![0; n_dyads],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> NodeGraph {
        NodeGraph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn path4() -> NodeGraph {
        NodeGraph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn rejects_self_loop_and_duplicates() {
        let err = NodeGraph::new(4, [(3, 3)]).unwrap_err();
        assert!(err.to_string().contains("(3,3)"), "{err}");
        let err = NodeGraph::new(4, [(0, 1), (1, 0)]).unwrap_err();
        assert!(err.to_string().contains("duplicate edge (0,1)"), "{err}");
        let err = NodeGraph::new(2, [(0, 5)]).unwrap_err();
        assert!(err.to_string().contains("(0,5)"), "{err}");
    }

    #[test]
    fn triangle_index_is_canonically_ordered() {
        let idx = build_dyad_index(&triangle());
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.pair(0).unwrap(), (0, 1));
        assert_eq!(idx.pair(1).unwrap(), (0, 2));
        assert_eq!(idx.pair(2).unwrap(), (1, 2));
        assert_eq!(idx.id(2, 1), Some(2));
        assert_eq!(idx.id(0, 3), None);
    }

    #[test]
    fn path_has_three_dyads() {
        let idx = build_dyad_index(&path4());
        assert_eq!(idx.len(), 3);
    }

    #[test]
    fn triangle_dyad_network_is_complete() {
        let net = build_dyad_network(build_dyad_index(&triangle()));
        for m in 0..3 {
            let mut expect: Vec<_> = (0..3).filter(|&x| x != m).collect();
            expect.sort_unstable();
            assert_eq!(net.adjacency(m).unwrap(), expect.as_slice());
        }
    }

    #[test]
    fn star_dyad_network_is_complete() {
        let g = NodeGraph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let net = build_dyad_network(build_dyad_index(&g));
        assert_eq!(net.n_dyads(), 3);
        for m in 0..3 {
            assert_eq!(net.degree(m).unwrap(), 2);
        }
    }

    #[test]
    fn path_dyad_adjacency() {
        let net = build_dyad_network(build_dyad_index(&path4()));
        // dyads: 0=(0,1), 1=(1,2), 2=(2,3)
        assert_eq!(net.adjacency(0).unwrap(), &[1]);
        assert_eq!(net.adjacency(1).unwrap(), &[0, 2]);
        assert_eq!(net.adjacency(2).unwrap(), &[1]);
    }

    #[test]
    fn path_end_dyads_at_distance_two() {
        let net = build_dyad_network(build_dyad_index(&path4()));
        assert_eq!(
            net.dyad_distance(0, 2, 10).unwrap(),
            DyadDistance::Finite(2)
        );
        assert_eq!(net.dyad_distance(1, 1, 10).unwrap(), DyadDistance::Finite(0));
    }

    #[test]
    fn distance_reports_cap_and_disconnection() {
        let net = build_dyad_network(build_dyad_index(&path4()));
        assert_eq!(net.dyad_distance(0, 2, 1).unwrap(), DyadDistance::BeyondCap);
        // two disjoint edges
        let g = NodeGraph::new(4, [(0, 1), (2, 3)]).unwrap();
        let net = build_dyad_network(build_dyad_index(&g));
        assert_eq!(
            net.dyad_distance(0, 1, 10).unwrap(),
            DyadDistance::Disconnected
        );
        assert!(net.dyad_distance(0, 9, 1).is_err());
    }

    #[test]
    fn shells_on_triangle_and_path() {
        let net = build_dyad_network(build_dyad_index(&triangle()));
        let shells = net.shells_up_to(0, 1).unwrap();
        assert_eq!(shells[0], vec![0]);
        let mut s1 = shells[1].clone();
        s1.sort_unstable();
        assert_eq!(s1, vec![1, 2]);

        let net = build_dyad_network(build_dyad_index(&path4()));
        let shells = net.shells_up_to(0, 2).unwrap();
        assert_eq!(shells[0], vec![0]);
        assert_eq!(shells[1], vec![1]);
        assert_eq!(shells[2], vec![2]);
        assert!(net.shells_up_to(7, 1).is_err());
    }

    #[test]
    fn shell_one_is_adjacency_in_order() {
        let g = NodeGraph::new(6, [(0, 1), (0, 2), (0, 3), (3, 4), (4, 5)]).unwrap();
        let net = build_dyad_network(build_dyad_index(&g));
        for m in 0..net.n_dyads() {
            let shells = net.shells_up_to(m, 1).unwrap();
            assert_eq!(shells[1].as_slice(), net.adjacency(m).unwrap());
        }
    }

    #[test]
    fn complete_graph_dyads_within_distance_two() {
        let n = 6;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        let net = build_dyad_network(build_dyad_index(&NodeGraph::new(n, edges).unwrap()));
        for a in 0..net.n_dyads() {
            for b in 0..net.n_dyads() {
                let d = net.dyad_distance(a, b, 5).unwrap().finite().unwrap();
                assert!(d <= 2, "dyads {a},{b} at distance {d}");
            }
        }
    }
}
