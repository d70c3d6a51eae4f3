//! On-disk layout of a preprocessed input.

use std::path::Path;

use matman::graphio::{read_distance_cache, DistanceMatrix, Graph};
use matman::Error;
use serde::{Deserialize, Serialize};

use crate::fail::{self, Failure, Result};

pub const DISTANCES: &str = "distances.mmdm";
pub const META: &str = "meta.json";
pub const GRAPH: &str = "graph.edges";
pub const LABELS: &str = "labels.txt";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Meta {
    pub m: usize,
    /// Largest raw distance (the max-scaling divisor).
    pub diameter: f64,
    pub scale: f64,
    pub dropped_nodes: usize,
    pub weighted: bool,
    /// False for dissimilarity inputs without adjacency.
    pub has_graph: bool,
    pub source: String,
}

pub struct Input {
    pub meta: Meta,
    pub distances: DistanceMatrix,
    pub graph: Option<Graph>,
}

/// Node ids are already `0..m`, so the file is read back without relabeling.
pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    let mut s = format!("# m {}\n", g.m());
    for u in 0..g.m() {
        let w = g.neighbor_weights(u);
        for (k, &v) in g.neighbors(u).iter().enumerate() {
            if u < v {
                match w {
                    Some(w) => s.push_str(&format!("{u} {v} {}\n", w[k])),
                    None => s.push_str(&format!("{u} {v}\n")),
                }
            }
        }
    }
    fail::write(path, s)
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fail::read_to_string(path)?;
    let bad = |msg: String| Failure::Core(Error::format(path, msg));
    let mut m = None;
    let mut plain = Vec::new();
    let mut weighted = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# m ") {
            m = Some(rest.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?);
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        let id = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("line {}: {e}", i + 1)));
        match t.len() {
            0 => {}
            2 => plain.push((id(t[0])?, id(t[1])?)),
            3 => weighted.push((
                id(t[0])?,
                id(t[1])?,
                t[2].parse::<f64>().map_err(|e| bad(format!("line {}: {e}", i + 1)))?,
            )),
            _ => return Err(bad(format!("line {}: expected `u v [w]`", i + 1))),
        }
    }
    let m = m.ok_or_else(|| bad("missing `# m` header".into()))?;
    let g = if weighted.is_empty() {
        Graph::from_edges(m, &plain)?
    } else {
        Graph::from_weighted_edges(m, &weighted)?
    };
    Ok(g)
}

pub fn load(dir: &Path) -> Result<Input> {
    let meta: Meta = fail::from_json(&dir.join(META))?;
    let distances = read_distance_cache(dir.join(DISTANCES))?;
    if distances.m() != meta.m {
        return Err(Failure::Core(Error::format(
            dir.join(META),
            format!("sidecar says m = {} but the cache holds {}", meta.m, distances.m()),
        )));
    }
    let graph = if meta.has_graph {
        Some(read_graph(&dir.join(GRAPH))?)
    } else {
        None
    };
    Ok(Input {
        meta,
        distances,
        graph,
    })
}
