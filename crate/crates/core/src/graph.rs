//! Sparse kNN ∪ MST adjacency graphs and power-weighted shortest paths.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;

use crate::data::DistanceMatrix;
use crate::error::{Error, Result};

/// Undirected weighted edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    fn new(a: usize, b: usize, w: f64) -> Self {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Self { u, v, w }
    }
}

fn sort_dedup(mut edges: Vec<Edge>) -> Vec<Edge> {
    edges.sort_by_key(|a| (a.u, a.v));
    edges.dedup_by(|a, b| a.u == b.u && a.v == b.v);
    edges
}

/// Symmetric kNN edge set: `(i, j)` is present when either endpoint is among
/// the `k` nearest of the other. Distance ties go to the smaller index.
pub fn knn_edges(dist: &DistanceMatrix, k: usize) -> Result<Vec<Edge>> {
    let n = dist.len();
    if k == 0 || k + 1 > n {
        return Err(Error::invalid(format!("k = {k} must lie in [1, {}]", n.saturating_sub(1))));
    }
    let per_node: Vec<Vec<Edge>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = dist.row(i);
            let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let by_dist = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist);
                cand.truncate(k);
            }
            cand.into_iter().map(|j| Edge::new(i, j, row[j])).collect()
        })
        .collect();
    Ok(sort_dedup(per_node.into_iter().flatten().collect()))
}

/// Minimum spanning tree of the complete graph over `dist` (dense Prim from
/// node 0, ties to the smaller index).
pub fn mst_edges(dist: &DistanceMatrix) -> Vec<Edge> {
    let n = dist.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = dist.get(0, j);
    }
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < next_w) {
                next = j;
                next_w = best[j];
            }
        }
        in_tree[next] = true;
        edges.push(Edge::new(parent[next], next, next_w));
        let row = dist.row(next);
        for j in 0..n {
            if !in_tree[j] && row[j] < best[j] {
                best[j] = row[j];
                parent[j] = next;
            }
        }
    }
    sort_dedup(edges)
}

/// Connected undirected graph in CSR form.
#[derive(Debug, Clone)]
pub struct SparseGraph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseGraph {
    /// Validates the edge list (no self-loops or duplicates, nonnegative
    /// weights) and requires the graph to be connected.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        let edges: Vec<Edge> = edges.into_iter().map(|e| Edge::new(e.u, e.v, e.w)).collect();
        for e in &edges {
            if e.u == e.v {
                return Err(Error::Structural(format!("self-loop at node {}", e.u)));
            }
            if e.v >= n {
                return Err(Error::Structural(format!("edge endpoint {} out of range", e.v)));
            }
            if !(e.w >= 0.0 && e.w.is_finite()) {
                return Err(Error::Structural(format!("invalid weight {} on ({}, {})", e.w, e.u, e.v)));
            }
        }
        let before = edges.len();
        let edges = sort_dedup(edges);
        if edges.len() != before {
            return Err(Error::Structural("duplicate edges".into()));
        }

        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for e in &edges {
            targets[fill[e.u]] = e.v;
            weights[fill[e.u]] = e.w;
            fill[e.u] += 1;
            targets[fill[e.v]] = e.u;
            weights[fill[e.v]] = e.w;
            fill[e.v] += 1;
        }
        let g = Self {
            n,
            edges,
            offsets,
            targets,
            weights,
        };
        if !g.is_connected() {
            return Err(Error::Structural("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for (j, _) in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == self.n
    }

    fn powered_weights(&self, alpha: f64) -> Vec<f64> {
        if alpha == 1.0 {
            self.weights.clone()
        } else {
            self.weights.iter().map(|w| w.powf(alpha)).collect()
        }
    }
}

/// kNN ∪ MST graph with edge weights taken from `dist`.
pub fn union_graph(dist: &DistanceMatrix, k: usize) -> Result<SparseGraph> {
    let mut edges = knn_edges(dist, k)?;
    edges.extend(mst_edges(dist));
    SparseGraph::new(dist.len(), sort_dedup(edges))
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap; node index breaks ties
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Precomputed `w^alpha` edge weights for repeated path queries.
pub struct PowerPaths<'g> {
    graph: &'g SparseGraph,
    alpha: f64,
    powered: Vec<f64>,
}

impl<'g> PowerPaths<'g> {
    pub fn new(graph: &'g SparseGraph, alpha: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha = {alpha} must be >= 1")));
        }
        Ok(Self {
            graph,
            alpha,
            powered: graph.powered_weights(alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Minimal sums of `w^alpha` from a set of seeds. Each seed `(node, c)`
    /// starts with accumulated cost `c` (already in the powered scale).
    pub fn power_sums_from_seeds(&self, seeds: &[(usize, f64)]) -> Result<Vec<f64>> {
        let g = self.graph;
        let mut dist = vec![f64::INFINITY; g.n];
        let mut heap = BinaryHeap::with_capacity(g.n);
        for &(s, c) in seeds {
            if s >= g.n {
                return Err(Error::invalid(format!("source {s} out of range")));
            }
            if c < dist[s] {
                dist[s] = c;
                heap.push(State { cost: c, node: s });
            }
        }
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            let r = g.offsets[node]..g.offsets[node + 1];
            for (&next, &w) in g.targets[r.clone()].iter().zip(&self.powered[r]) {
                let cand = cost + w;
                if cand < dist[next] {
                    dist[next] = cand;
                    heap.push(State { cost: cand, node: next });
                }
            }
        }
        if let Some(v) = dist.iter().position(|d| d.is_infinite()) {
            return Err(Error::Structural(format!("node {v} is unreachable")));
        }
        Ok(dist)
    }

    /// Power-alpha distances `(min sum w^alpha)^(1/alpha)` from one source.
    pub fn distances_from(&self, source: usize) -> Result<Vec<f64>> {
        let mut d = self.power_sums_from_seeds(&[(source, 0.0)])?;
        self.root_in_place(&mut d);
        Ok(d)
    }

    pub fn root_in_place(&self, sums: &mut [f64]) {
        if self.alpha != 1.0 {
            let inv = 1.0 / self.alpha;
            for v in sums {
                *v = v.powf(inv);
            }
        }
    }

    /// Full symmetric distance matrix; entry `(i, j)` with `i < j` comes from
    /// the run rooted at `i`.
    pub fn all_pairs(&self) -> Result<DistanceMatrix> {
        let n = self.graph.n;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|s| self.distances_from(s))
            .collect::<Result<_>>()?;
        let mut entries = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            for j in (i + 1)..n {
                entries[i * n + j] = row[j];
                entries[j * n + i] = row[j];
            }
        }
        Ok(DistanceMatrix::from_raw_unchecked(n, entries))
    }
}

/// Power-alpha shortest-path distances from each source to every node.
/// Row `r` corresponds to `sources[r]`.
pub fn power_shortest_paths(g: &SparseGraph, alpha: f64, sources: &[usize]) -> Result<Vec<Vec<f64>>> {
    if sources.is_empty() {
        return Err(Error::invalid("no sources given"));
    }
    let paths = PowerPaths::new(g, alpha)?;
    sources.par_iter().map(|&s| paths.distances_from(s)).collect()
}
