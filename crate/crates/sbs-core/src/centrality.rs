//! The three raw score dimensions: prevalence (term frequency), diversity
//! (degree) and connectivity (weighted betweenness).
//!
//! Betweenness runs Brandes' single-source algorithm over every node, with
//! Dijkstra on reciprocal arc distances and a dependency back-propagation
//! pass per source. Each unordered node pair counts once, endpoints are
//! excluded and no normalization is applied; the standardization step
//! downstream absorbs any constant factor. A brute-force path enumerator
//! with the same contract serves as the verification oracle on small
//! graphs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::WordNetwork;
use crate::textprep::TokenDoc;

/// Absolute tolerance for detecting equal-length shortest paths. Sums of
/// reciprocal integer weights differ either by float noise (~1e-15) or by
/// a genuine rational gap (>= ~1e-9 for weights up to 20), so 1e-12
/// separates the two cleanly.
pub const PATH_EPS: f64 = 1e-12;

/// Largest graph the brute-force oracle will accept.
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

#[derive(Debug, Error)]
pub enum CentralityError {
    #[error(
        "brute-force betweenness refused: {0} nodes exceeds the limit of {BRUTE_FORCE_MAX_NODES}"
    )]
    GraphTooLarge(usize),
}

/// Raw per-term scores for one window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RawScores {
    pub prevalence: u64,
    pub diversity: usize,
    pub connectivity: f64,
}

/// Total occurrences of `term` across the window's token streams.
pub fn prevalence(docs: &[TokenDoc], term: &str) -> u64 {
    docs.iter()
        .map(|d| d.tokens.iter().filter(|t| *t == term).count() as u64)
        .sum()
}

/// Occurrence counts for every distinct term in one pass.
pub fn prevalence_map(docs: &[TokenDoc]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for doc in docs {
        for token in &doc.tokens {
            *counts.entry(token.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Distinct-neighbor count in the pruned network; 0 for absent terms.
pub fn degree(network: &WordNetwork, term: &str) -> usize {
    network.degree(term)
}

/// Node names in sorted order plus an adjacency list of
/// (neighbor index, reciprocal distance) pairs.
struct IndexedGraph {
    names: Vec<String>,
    adjacency: Vec<Vec<(u32, f64)>>,
}

impl IndexedGraph {
    fn build(network: &WordNetwork) -> Self {
        let names: Vec<String> = network.nodes().map(str::to_string).collect();
        let index: BTreeMap<&str, u32> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as u32))
            .collect();
        let mut adjacency = vec![Vec::new(); names.len()];
        for (a, b, w) in network.arcs() {
            let (ia, ib) = (index[a], index[b]);
            let dist = 1.0 / w as f64;
            adjacency[ia as usize].push((ib, dist));
            adjacency[ib as usize].push((ia, dist));
        }
        // Deterministic relaxation order, and shorter arcs first so the
        // brute-force search finds good bounds early.
        for list in &mut adjacency {
            list.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        }
        IndexedGraph { names, adjacency }
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Min-heap entry ordered by tentative distance, then node index.
#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One Brandes pass: Dijkstra from `source` with shortest-path counting,
/// then dependency accumulation in reverse settlement order. Returns each
/// node's dependency contribution for this source.
fn brandes_pass(graph: &IndexedGraph, source: u32) -> Vec<f64> {
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order: Vec<u32> = Vec::with_capacity(n);

    dist[source as usize] = 0.0;
    sigma[source as usize] = 1.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });

    while let Some(HeapEntry { node: v, .. }) = heap.pop() {
        let vi = v as usize;
        if settled[vi] {
            continue;
        }
        settled[vi] = true;
        order.push(v);
        let dv = dist[vi];
        for &(w, len) in &graph.adjacency[vi] {
            let wi = w as usize;
            if settled[wi] {
                continue;
            }
            let nd = dv + len;
            if nd < dist[wi] - PATH_EPS {
                dist[wi] = nd;
                sigma[wi] = sigma[vi];
                preds[wi].clear();
                preds[wi].push(v);
                heap.push(HeapEntry { dist: nd, node: w });
            } else if (nd - dist[wi]).abs() <= PATH_EPS {
                sigma[wi] += sigma[vi];
                preds[wi].push(v);
            }
        }
    }

    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        let wi = w as usize;
        for &v in &preds[wi] {
            let vi = v as usize;
            delta[vi] += sigma[vi] / sigma[wi] * (1.0 + delta[wi]);
        }
    }
    delta[source as usize] = 0.0;
    delta
}

/// Weighted betweenness of every node under reciprocal arc distances.
///
/// Sources run in parallel, but partial dependencies are summed in source
/// order so the result is bit-identical to a serial run.
pub fn weighted_betweenness(network: &WordNetwork) -> BTreeMap<String, f64> {
    let graph = IndexedGraph::build(network);
    let n = graph.len();
    let mut centrality = vec![0.0f64; n];

    let sources: Vec<u32> = (0..n as u32).collect();
    for chunk in sources.chunks(128) {
        let passes: Vec<Vec<f64>> = chunk.par_iter().map(|&s| brandes_pass(&graph, s)).collect();
        for delta in passes {
            for (acc, d) in centrality.iter_mut().zip(delta) {
                *acc += d;
            }
        }
    }

    // Each unordered pair was seen from both endpoints.
    graph
        .names
        .iter()
        .zip(centrality)
        .map(|(name, value)| (name.clone(), value / 2.0))
        .collect()
}

/// Exhaustive betweenness oracle: enumerates every simple path between
/// every pair, keeps the minimal-length ones (within [`PATH_EPS`]) and
/// credits interior nodes with their pair fraction. Same contract as
/// [`weighted_betweenness`]; refuses graphs beyond
/// [`BRUTE_FORCE_MAX_NODES`].
pub fn brute_force_betweenness(
    network: &WordNetwork,
) -> Result<BTreeMap<String, f64>, CentralityError> {
    let graph = IndexedGraph::build(network);
    let n = graph.len();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(CentralityError::GraphTooLarge(n));
    }
    let mut centrality = vec![0.0f64; n];
    for s in 0..n {
        for t in (s + 1)..n {
            let paths = minimal_paths(&graph, s as u32, t as u32);
            if paths.is_empty() {
                continue;
            }
            let share = 1.0 / paths.len() as f64;
            for path in &paths {
                for &v in &path[1..path.len() - 1] {
                    centrality[v as usize] += share;
                }
            }
        }
    }
    Ok(graph
        .names
        .iter()
        .zip(centrality)
        .map(|(name, value)| (name.clone(), value))
        .collect())
}

/// All minimal-length simple paths from `s` to `t`.
///
/// Two depth-first sweeps: the first finds the minimum length, the second
/// collects every path within tolerance of it. Both abandon a prefix as
/// soon as it exceeds the best known bound, which is sound because arc
/// lengths are strictly positive.
fn minimal_paths(graph: &IndexedGraph, s: u32, t: u32) -> Vec<Vec<u32>> {
    let n = graph.len();
    let mut best = f64::INFINITY;
    let mut on_path = vec![false; n];
    on_path[s as usize] = true;
    let mut prefix = vec![s];
    find_best(graph, t, &mut prefix, &mut on_path, 0.0, &mut best);
    if best.is_infinite() {
        return Vec::new();
    }
    let mut paths = Vec::new();
    let mut on_path = vec![false; n];
    on_path[s as usize] = true;
    let mut prefix = vec![s];
    collect_minimal(graph, t, &mut prefix, &mut on_path, 0.0, best, &mut paths);
    paths
}

fn find_best(
    graph: &IndexedGraph,
    target: u32,
    prefix: &mut Vec<u32>,
    on_path: &mut [bool],
    length: f64,
    best: &mut f64,
) {
    let v = *prefix.last().unwrap();
    if v == target {
        if length < *best {
            *best = length;
        }
        return;
    }
    for &(w, len) in &graph.adjacency[v as usize] {
        if on_path[w as usize] {
            continue;
        }
        let next = length + len;
        if next > *best + PATH_EPS {
            continue;
        }
        on_path[w as usize] = true;
        prefix.push(w);
        find_best(graph, target, prefix, on_path, next, best);
        prefix.pop();
        on_path[w as usize] = false;
    }
}

#[allow(clippy::too_many_arguments)]
fn collect_minimal(
    graph: &IndexedGraph,
    target: u32,
    prefix: &mut Vec<u32>,
    on_path: &mut [bool],
    length: f64,
    best: f64,
    paths: &mut Vec<Vec<u32>>,
) {
    let v = *prefix.last().unwrap();
    if v == target {
        if (length - best).abs() <= PATH_EPS {
            paths.push(prefix.clone());
        }
        return;
    }
    for &(w, len) in &graph.adjacency[v as usize] {
        if on_path[w as usize] {
            continue;
        }
        let next = length + len;
        if next > best + PATH_EPS {
            continue;
        }
        on_path[w as usize] = true;
        prefix.push(w);
        collect_minimal(graph, target, prefix, on_path, next, best, paths);
        prefix.pop();
        on_path[w as usize] = false;
    }
}
