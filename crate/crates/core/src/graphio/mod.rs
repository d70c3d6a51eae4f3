//! Graph ingestion, all-pairs shortest paths, max-scaling and hop layers.

mod distance;
pub mod generators;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use distance::{
    apsp, bfs_hops, hop_layers, load_dissimilarity, max_scale, parse_dissimilarity, read_distance_cache,
    write_distance_cache, DistanceMatrix, CACHE_MAGIC, CACHE_VERSION,
};

/// Undirected simple graph with sorted adjacency lists and optional
/// positive edge weights (aligned with the adjacency lists).
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    weights: Option<Vec<Vec<f64>>>,
    labels: Vec<String>,
    dropped_nodes: usize,
}

impl Graph {
    /// Unweighted graph on `m` nodes. Self-loops are ignored and duplicate
    /// edges merged.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let w: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        let mut g = Self::build(m, &w)?;
        g.weights = None;
        Ok(g)
    }

    /// Weighted graph; duplicate edges keep the smallest weight.
    pub fn from_weighted_edges(m: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        Self::build(m, edges)
    }

    fn build(m: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut map: Vec<HashMap<usize, f64>> = vec![HashMap::new(); m];
        for &(u, v, w) in edges {
            if u >= m || v >= m {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for {m} nodes")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("edge ({u}, {v}) has nonpositive weight {w}")));
            }
            if u == v {
                continue;
            }
            for (a, b) in [(u, v), (v, u)] {
                let e = map[a].entry(b).or_insert(w);
                *e = e.min(w);
            }
        }
        let mut adj = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for row in map {
            let mut r: Vec<_> = row.into_iter().collect();
            r.sort_unstable_by_key(|&(v, _)| v);
            adj.push(r.iter().map(|&(v, _)| v).collect());
            weights.push(r.iter().map(|&(_, w)| w).collect());
        }
        Ok(Graph {
            adj,
            weights: Some(weights),
            labels: (0..m).map(|i| i.to_string()).collect(),
            dropped_nodes: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    /// Weights aligned with [`Graph::neighbors`]; `None` for unweighted graphs.
    pub fn neighbor_weights(&self, u: usize) -> Option<&[f64]> {
        self.weights.as_ref().map(|w| w[u].as_slice())
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Original node labels, indexed by relabeled id.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Nodes discarded when the largest component was extracted.
    pub fn dropped_nodes(&self) -> usize {
        self.dropped_nodes
    }

    /// Connected components, each listed in increasing node order, ordered
    /// by their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let m = self.m();
        let mut seen = vec![false; m];
        let mut out = Vec::new();
        for s in 0..m {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.m() > 0 && self.components().len() == 1
    }

    /// Subgraph induced by `nodes` (which must be sorted), relabeled in order.
    pub fn induced(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.m()];
        for (i, &u) in nodes.iter().enumerate() {
            index[u] = i;
        }
        let mut adj = Vec::with_capacity(nodes.len());
        let mut weights = self.weights.as_ref().map(|_| Vec::with_capacity(nodes.len()));
        for &u in nodes {
            let mut row = Vec::new();
            let mut wrow = Vec::new();
            for (k, &v) in self.adj[u].iter().enumerate() {
                if index[v] != usize::MAX {
                    row.push(index[v]);
                    if let Some(w) = &self.weights {
                        wrow.push(w[u][k]);
                    }
                }
            }
            adj.push(row);
            if let Some(ws) = weights.as_mut() {
                ws.push(wrow);
            }
        }
        Graph {
            adj,
            weights,
            labels: nodes.iter().map(|&u| self.labels[u].clone()).collect(),
            dropped_nodes: self.dropped_nodes + self.m() - nodes.len(),
        }
    }

    /// Largest connected component (ties go to the component holding the
    /// earliest node). The number of discarded nodes is recorded.
    pub fn largest_component(&self) -> Graph {
        let comps = self.components();
        let best = comps
            .iter()
            .enumerate()
            .max_by_key(|(i, c)| (c.len(), std::cmp::Reverse(*i)))
            .map(|(_, c)| c.clone())
            .unwrap_or_default();
        if best.len() == self.m() {
            return self.clone();
        }
        self.induced(&best)
    }
}

/// Parse a whitespace-separated edge list (`u v [w]` per line, `#` or `%`
/// comments). Nodes are relabeled in order of first appearance; only the
/// largest connected component is kept.
pub fn load_edgelist(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let g = parse_edgelist(&text).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path, message),
        other => other,
    })?;
    Ok(g)
}

/// [`load_edgelist`] on in-memory text.
pub fn parse_edgelist(text: &str) -> Result<Graph> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut weighted = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let (Some(a), Some(b)) = (tok.next(), tok.next()) else {
            return Err(Error::format("<edgelist>", format!("line {}: expected `u v [w]`", lineno + 1)));
        };
        let w = match tok.next() {
            Some(t) => {
                weighted = true;
                t.parse::<f64>().map_err(|_| {
                    Error::format("<edgelist>", format!("line {}: bad weight {t:?}", lineno + 1))
                })?
            }
            None => 1.0,
        };
        if !(w > 0.0) {
            return Err(Error::invalid(format!("line {}: nonpositive weight {w}", lineno + 1)));
        }
        let mut intern = |s: &'_ str| -> usize {
            let next = labels.len();
            let i = *ids.entry(s.to_string()).or_insert(next);
            if i == next {
                labels.push(s.to_string());
            }
            i
        };
        let (ua, ub) = (intern(a), intern(b));
        edges.push((ua, ub, w));
    }
    if edges.is_empty() {
        return Err(Error::invalid("edge list contains no edges"));
    }
    let m = labels.len();
    let mut g = Graph::build(m, &edges)?;
    if !weighted {
        g.weights = None;
    }
    g.labels = labels;
    let g = g.largest_component();
    if g.dropped_nodes() > 0 {
        log::warn!(
            "input graph is disconnected; kept the largest component ({} nodes), dropped {}",
            g.m(),
            g.dropped_nodes()
        );
    }
    Ok(g)
}
