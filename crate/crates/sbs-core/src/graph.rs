//! Undirected weighted word co-occurrence networks.
//!
//! Two tokens co-occur when their positions in one document are at most
//! `window` apart; every qualifying position pair adds 1 to the arc
//! weight. Arc distance for shortest-path work is the reciprocal of the
//! weight, so frequent co-occurrences make short arcs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::TokenDoc;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no arc between {0:?} and {1:?}")]
    MissingArc(String, String),
    #[error("self-loop {0:?} rejected")]
    SelfLoop(String),
    #[error("arc weight must be >= 1")]
    ZeroWeight,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Co-occurrence parameters: positional window and pruning threshold.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GraphConfig {
    pub window: usize,
    pub prune_min: u32,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            window: 7,
            prune_min: 2,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.window < 1 {
            return Err("window must be >= 1".into());
        }
        if self.prune_min < 1 {
            return Err("prune_min must be >= 1".into());
        }
        Ok(())
    }
}

/// Undirected weighted word network. Arcs are stored once, with their
/// endpoints in lexicographic order; nodes without arcs are tracked so a
/// token seen in the corpus still exists before pruning.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordNetwork {
    nodes: std::collections::BTreeSet<String>,
    arcs: BTreeMap<(String, String), u32>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl WordNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a network from explicit arcs; rejects self-loops and zero
    /// weights. Handy for fixtures and oracles.
    pub fn from_arcs<I, S>(arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (S, S, u32)>,
        S: AsRef<str>,
    {
        let mut network = WordNetwork::new();
        for (a, b, w) in arcs {
            let (a, b) = (a.as_ref(), b.as_ref());
            if a == b {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            if w == 0 {
                return Err(GraphError::ZeroWeight);
            }
            network.add_node(a);
            network.add_node(b);
            *network.arcs.entry(ordered(a, b)).or_insert(0) += w;
        }
        Ok(network)
    }

    pub fn add_node(&mut self, token: &str) {
        if !self.nodes.contains(token) {
            self.nodes.insert(token.to_string());
        }
    }

    fn add_cooccurrence(&mut self, a: &str, b: &str) {
        debug_assert_ne!(a, b);
        *self.arcs.entry(ordered(a, b)).or_insert(0) += 1;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_node(&self, token: &str) -> bool {
        self.nodes.contains(token)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    /// Arcs with endpoints in lexicographic order, iterated in that order.
    pub fn arcs(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.arcs
            .iter()
            .map(|((a, b), w)| (a.as_str(), b.as_str(), *w))
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u32> {
        self.arcs.get(&ordered(a, b)).copied()
    }

    /// Total arc-weight mass: the number of qualifying position pairs that
    /// built this network.
    pub fn total_weight(&self) -> u64 {
        self.arcs.values().map(|&w| w as u64).sum()
    }

    /// Reciprocal arc distance 1/w.
    pub fn distance(&self, a: &str, b: &str) -> Result<f64, GraphError> {
        self.weight(a, b)
            .map(|w| 1.0 / w as f64)
            .ok_or_else(|| GraphError::MissingArc(a.to_string(), b.to_string()))
    }

    /// Number of distinct neighbors; 0 for absent tokens.
    pub fn degree(&self, token: &str) -> usize {
        self.arcs
            .keys()
            .filter(|(a, b)| a == token || b == token)
            .count()
    }

    /// Degree of every node, in one pass.
    pub fn degree_map(&self) -> BTreeMap<&str, usize> {
        let mut degrees: BTreeMap<&str, usize> =
            self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for (a, b) in self.arcs.keys() {
            *degrees.get_mut(a.as_str()).unwrap() += 1;
            *degrees.get_mut(b.as_str()).unwrap() += 1;
        }
        degrees
    }

    /// Dump as CSV `source,target,weight`, one row per unordered pair, in
    /// lexicographic pair order.
    pub fn write_csv(&self, path: &Path) -> Result<(), GraphError> {
        let io_err = |source| GraphError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        writeln!(file, "source,target,weight").map_err(io_err)?;
        for ((a, b), w) in &self.arcs {
            writeln!(file, "{a},{b},{w}").map_err(io_err)?;
        }
        file.flush().map_err(io_err)
    }
}

/// Accumulate co-occurrence counts over documents. Windows never cross
/// document boundaries; identical tokens never form a self-loop; every
/// distinct token becomes a node even if it gains no arc.
///
/// Large batches build per-chunk partial networks in parallel and merge
/// them; integer weights make the merge exact, so the result is identical
/// to a serial pass regardless of worker count.
pub fn build_cooccurrence(docs: &[TokenDoc], window: usize) -> WordNetwork {
    const PARALLEL_CHUNK: usize = 32;
    if docs.len() < 2 * PARALLEL_CHUNK {
        let mut network = WordNetwork::new();
        for doc in docs {
            accumulate_doc(&mut network, doc, window);
        }
        return network;
    }
    use rayon::prelude::*;
    let parts: Vec<WordNetwork> = docs
        .par_chunks(PARALLEL_CHUNK)
        .map(|chunk| {
            let mut partial = WordNetwork::new();
            for doc in chunk {
                accumulate_doc(&mut partial, doc, window);
            }
            partial
        })
        .collect();
    merge(parts)
}

fn accumulate_doc(network: &mut WordNetwork, doc: &TokenDoc, window: usize) {
    let tokens = &doc.tokens;
    for (i, a) in tokens.iter().enumerate() {
        network.add_node(a);
        let end = tokens.len().min(i + window + 1);
        for b in &tokens[i + 1..end] {
            if a != b {
                network.add_cooccurrence(a, b);
            }
        }
    }
}

/// Drop arcs below the threshold, then drop nodes left without arcs.
pub fn prune(network: &WordNetwork, prune_min: u32) -> WordNetwork {
    let mut pruned = WordNetwork::new();
    for ((a, b), &w) in &network.arcs {
        if w >= prune_min {
            pruned.add_node(a);
            pruned.add_node(b);
            pruned.arcs.insert((a.clone(), b.clone()), w);
        }
    }
    pruned
}

/// Union of partial networks: nodes united, arc weights summed.
pub fn merge<I>(networks: I) -> WordNetwork
where
    I: IntoIterator<Item = WordNetwork>,
{
    let mut merged = WordNetwork::new();
    for network in networks {
        merged.nodes.extend(network.nodes);
        for (pair, w) in network.arcs {
            *merged.arcs.entry(pair).or_insert(0) += w;
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::WeekWindow;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn doc(tokens: &[&str]) -> TokenDoc {
        TokenDoc {
            doc_id: "d".into(),
            week: WeekWindow {
                iso_year: 2016,
                iso_week: 1,
                lag: 0,
            },
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    /// Naive position-pair oracle: count every i < j with j - i <= window
    /// and distinct tokens, per document.
    fn naive_cooccurrence(docs: &[TokenDoc], window: usize) -> HashMap<(String, String), u32> {
        let mut counts = HashMap::new();
        for d in docs {
            let n = d.tokens.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    if j - i > window {
                        continue;
                    }
                    if d.tokens[i] == d.tokens[j] {
                        continue;
                    }
                    let (a, b) = if d.tokens[i] <= d.tokens[j] {
                        (d.tokens[i].clone(), d.tokens[j].clone())
                    } else {
                        (d.tokens[j].clone(), d.tokens[i].clone())
                    };
                    *counts.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    fn arcs_of(network: &WordNetwork) -> HashMap<(String, String), u32> {
        network
            .arcs()
            .map(|(a, b, w)| ((a.to_string(), b.to_string()), w))
            .collect()
    }

    #[test]
    fn repeated_phrase_builds_weight_ten() {
        let docs: Vec<TokenDoc> = (0..10).map(|_| doc(&["happi", "holiday"])).collect();
        let network = build_cooccurrence(&docs, 7);
        assert_eq!(network.weight("happi", "holiday"), Some(10));
    }

    #[test]
    fn three_tokens_within_window_form_triangle() {
        let network = build_cooccurrence(&[doc(&["a", "b", "c"])], 7);
        assert_eq!(network.weight("a", "b"), Some(1));
        assert_eq!(network.weight("a", "c"), Some(1));
        assert_eq!(network.weight("b", "c"), Some(1));
        assert_eq!(network.arc_count(), 3);
    }

    #[test]
    fn tokens_beyond_window_do_not_connect() {
        // a and b sit 8 positions apart; window 7 must not connect them.
        let network = build_cooccurrence(&[doc(&["a", "x", "x", "x", "x", "x", "x", "x", "b"])], 7);
        assert_eq!(network.weight("a", "b"), None);
        let naive = naive_cooccurrence(&[doc(&["a", "x", "x", "x", "x", "x", "x", "x", "b"])], 7);
        assert_eq!(arcs_of(&network), naive);
    }

    #[test]
    fn windows_do_not_cross_documents() {
        let network = build_cooccurrence(&[doc(&["a"]), doc(&["b"])], 7);
        assert_eq!(network.weight("a", "b"), None);
        assert!(network.contains_node("a"));
        assert!(network.contains_node("b"));
    }

    #[test]
    fn repeated_token_never_self_loops() {
        let network = build_cooccurrence(&[doc(&["a", "a", "a", "b"])], 7);
        assert_eq!(network.weight("a", "a"), None);
        assert_eq!(network.weight("a", "b"), Some(3));
    }

    #[test]
    fn prune_removes_weak_arcs_and_orphaned_nodes() {
        let network = WordNetwork::from_arcs([("a", "b", 1), ("b", "c", 2)]).unwrap();
        let pruned = prune(&network, 2);
        assert_eq!(pruned.weight("b", "c"), Some(2));
        assert_eq!(pruned.weight("a", "b"), None);
        assert!(!pruned.contains_node("a"));
        assert!(pruned.contains_node("b"));
    }

    #[test]
    fn prune_threshold_is_strict() {
        let network = WordNetwork::from_arcs([("a", "b", 2)]).unwrap();
        assert_eq!(prune(&network, 2).weight("a", "b"), Some(2));
    }

    #[test]
    fn prune_empty_network() {
        let pruned = prune(&WordNetwork::new(), 2);
        assert!(pruned.is_empty());
        assert_eq!(pruned.arc_count(), 0);
    }

    #[test]
    fn merge_with_empty_is_identity() {
        let network = WordNetwork::from_arcs([("a", "b", 3)]).unwrap();
        let merged = merge([network.clone(), WordNetwork::new()]);
        assert_eq!(merged, network);
    }

    #[test]
    fn distance_is_reciprocal_weight() {
        let network =
            WordNetwork::from_arcs([("a", "b", 20), ("b", "c", 1), ("c", "d", 4)]).unwrap();
        assert_eq!(network.distance("a", "b").unwrap(), 0.05);
        assert_eq!(network.distance("b", "c").unwrap(), 1.0);
        assert_eq!(network.distance("c", "d").unwrap(), 0.25);
        assert!(network.distance("a", "d").is_err());
    }

    #[test]
    fn degree_counts_distinct_neighbors() {
        let network = WordNetwork::from_arcs([
            ("hub", "a", 5),
            ("hub", "b", 1),
            ("hub", "c", 2),
            ("hub", "d", 9),
        ])
        .unwrap();
        assert_eq!(network.degree("hub"), 4);
        assert_eq!(network.degree("a"), 1);
        assert_eq!(network.degree("missing"), 0);
        assert_eq!(network.degree_map()[&"hub"], 4);
    }

    #[test]
    fn csv_dump_is_sorted_and_complete() {
        let network = WordNetwork::from_arcs([("b", "a", 2), ("c", "a", 3)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.csv");
        network.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "source,target,weight\na,b,2\na,c,3\n");
    }

    fn random_docs(seed: u64, max_docs: usize, max_len: usize) -> Vec<TokenDoc> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vocab: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
        let n_docs = rng.gen_range(1..=max_docs);
        (0..n_docs)
            .map(|d| {
                let len = rng.gen_range(0..=max_len);
                TokenDoc {
                    doc_id: format!("d{d}"),
                    week: WeekWindow {
                        iso_year: 2016,
                        iso_week: 1,
                        lag: 0,
                    },
                    tokens: (0..len)
                        .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
                        .collect(),
                }
            })
            .collect()
    }

    #[test]
    fn build_matches_naive_oracle_on_random_corpora() {
        for seed in 0..50 {
            let docs = random_docs(seed, 4, 60);
            let window = (seed as usize % 9) + 1;
            let network = build_cooccurrence(&docs, window);
            let naive = naive_cooccurrence(&docs, window);
            assert_eq!(arcs_of(&network), naive, "seed {seed} window {window}");
            let mass: u32 = naive.values().sum();
            assert_eq!(network.total_weight(), mass as u64);
        }
    }

    #[test]
    fn merge_of_doc_networks_equals_whole_build() {
        for seed in 0..20 {
            let docs = random_docs(seed, 5, 40);
            let whole = build_cooccurrence(&docs, 5);
            let parts: Vec<WordNetwork> = docs
                .iter()
                .map(|d| build_cooccurrence(std::slice::from_ref(d), 5))
                .collect();
            let mut reversed = parts.clone();
            reversed.reverse();
            assert_eq!(merge(parts), whole);
            assert_eq!(merge(reversed), whole);
        }
    }

    #[test]
    fn parallel_chunked_build_equals_serial_accumulation() {
        // Enough docs to cross the parallel threshold.
        let mut docs: Vec<TokenDoc> = Vec::new();
        let mut seed = 0;
        while docs.len() < 80 {
            docs.extend(random_docs(seed, 5, 30));
            seed += 1;
        }
        let chunked = build_cooccurrence(&docs, 4);
        let mut serial = WordNetwork::new();
        for d in &docs {
            serial = merge([serial, build_cooccurrence(std::slice::from_ref(d), 4)]);
        }
        assert_eq!(chunked, serial);
    }

    proptest! {
        #[test]
        fn prune_is_idempotent_and_monotone(seed in 0u64..500, k in 1u32..5) {
            let docs = random_docs(seed, 3, 40);
            let network = build_cooccurrence(&docs, 4);
            let once = prune(&network, k);
            prop_assert_eq!(prune(&once, k), once.clone());
            // prune_min 1 keeps all weights
            let all = prune(&network, 1);
            prop_assert_eq!(all.total_weight(), network.total_weight());
            // raising the threshold never raises a degree
            let tighter = prune(&network, k + 1);
            for (node, d) in tighter.degree_map() {
                prop_assert!(d <= once.degree(node));
            }
        }

        #[test]
        fn no_self_loops_ever(seed in 0u64..500) {
            let docs = random_docs(seed, 3, 40);
            let network = build_cooccurrence(&docs, 6);
            for (a, b, _) in network.arcs() {
                prop_assert_ne!(a, b);
            }
        }
    }
}
