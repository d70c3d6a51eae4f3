use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::Graph;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"MMDM";
pub const CACHE_VERSION: u32 = 1;

/// Dense symmetric matrix of pairwise distances, row-major, with the
/// divisor applied by the last [`max_scale`].
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    data: Vec<f64>,
    scale: f64,
}

impl DistanceMatrix {
    /// Validates squareness, finiteness, nonnegativity, a zero diagonal and
    /// exact symmetry.
    pub fn new(m: usize, data: Vec<f64>, scale: f64) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::invalid(format!(
                "distance data has {} entries, expected {m}²",
                data.len()
            )));
        }
        for i in 0..m {
            if data[i * m + i] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..m {
                let x = data[i * m + j];
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::invalid(format!("entry ({i}, {j}) = {x} is not a distance")));
                }
                if x != data[j * m + i] {
                    return Err(Error::invalid(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { m, data, scale })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Divisor recorded by the last max-scaling (1 for unscaled input).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest positive entry, if any.
    pub fn min_positive(&self) -> Option<f64> {
        self.data
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .min_by(f64::total_cmp)
    }
}

/// Divide every entry by the maximum. Idempotent: an already scaled matrix
/// comes back unchanged with scale 1.
pub fn max_scale(d: &DistanceMatrix) -> Result<DistanceMatrix> {
    let max = d.max();
    if !(max > 0.0) {
        return Err(Error::invalid("cannot max-scale an all-zero distance matrix"));
    }
    Ok(DistanceMatrix {
        m: d.m,
        data: d.data.iter().map(|x| x / max).collect(),
        scale: max,
    })
}

/// Hop counts from `src`; `u32::MAX` marks unreachable nodes.
pub fn bfs_hops(g: &Graph, src: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.m()];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let du = dist[u] + 1;
        for &v in g.neighbors(u) {
            if dist[v] == u32::MAX {
                dist[v] = du;
                queue.push_back(v);
            }
        }
    }
    dist
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so that `BinaryHeap` pops the smallest distance.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn dijkstra(g: &Graph, src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.m()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        let w = g.neighbor_weights(u).expect("weighted graph");
        for (k, &v) in g.neighbors(u).iter().enumerate() {
            let nd = d + w[k];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        }
    }
    dist
}

/// All-pairs shortest paths: BFS per source for unweighted graphs, Dijkstra
/// otherwise. Rows are computed in parallel.
pub fn apsp(g: &Graph) -> Result<DistanceMatrix> {
    let m = g.m();
    if m == 0 {
        return Err(Error::invalid("empty graph"));
    }
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|s| {
            if g.is_weighted() {
                dijkstra(g, s)
            } else {
                bfs_hops(g, s)
                    .into_iter()
                    .map(|h| if h == u32::MAX { f64::INFINITY } else { h as f64 })
                    .collect()
            }
        })
        .collect();
    let mut data = Vec::with_capacity(m * m);
    for (s, row) in rows.into_iter().enumerate() {
        if let Some(t) = row.iter().position(|x| x.is_infinite()) {
            return Err(Error::Disconnected(s, t));
        }
        data.extend(row);
    }
    // Dijkstra sums can differ in the last bit between directions.
    for i in 0..m {
        for j in (i + 1)..m {
            let v = data[i * m + j].min(data[j * m + i]);
            data[i * m + j] = v;
            data[j * m + i] = v;
        }
    }
    Ok(DistanceMatrix { m, data, scale: 1.0 })
}

/// Hop layers `L(u; k)` for every source `u`: `layers[u][k − 1]` lists the
/// nodes exactly `k` hops from `u`, in increasing order.
pub fn hop_layers(g: &Graph) -> Result<Vec<Vec<Vec<usize>>>> {
    if g.is_weighted() {
        return Err(Error::Unsupported(
            "hop layers are defined for unweighted graphs only".into(),
        ));
    }
    (0..g.m())
        .into_par_iter()
        .map(|u| {
            let hops = bfs_hops(g, u);
            let mut layers: Vec<Vec<usize>> = Vec::new();
            for (v, &h) in hops.iter().enumerate() {
                if h == u32::MAX {
                    return Err(Error::Disconnected(u, v));
                }
                if h == 0 {
                    continue;
                }
                let k = h as usize;
                if layers.len() < k {
                    layers.resize(k, Vec::new());
                }
                layers[k - 1].push(v);
            }
            Ok(layers)
        })
        .collect()
}

/// Write the binary cache: magic, version (u32), m (u64), scale (f64), then
/// m·m little-endian f32 entries in row-major order.
pub fn write_distance_cache(path: impl AsRef<Path>, d: &DistanceMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(CACHE_MAGIC)?;
    put(&CACHE_VERSION.to_le_bytes())?;
    put(&(d.m as u64).to_le_bytes())?;
    put(&d.scale.to_le_bytes())?;
    for &x in &d.data {
        put(&(x as f32).to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_distance_cache(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; 24];
    r.read_exact(&mut header)
        .map_err(|_| Error::format(path, "truncated distance cache header"))?;
    if &header[0..4] != CACHE_MAGIC {
        return Err(Error::format(path, "not a distance cache (bad magic)"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(Error::format(path, format!("unsupported cache version {version}")));
    }
    let m = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let scale = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    if body.len() != m * m * 4 {
        return Err(Error::format(
            path,
            format!("expected {} bytes of distances, found {}", m * m * 4, body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    DistanceMatrix::new(m, data, scale).map_err(|e| Error::format(path, e.to_string()))
}

/// Read a square dissimilarity matrix (whitespace- or comma-separated rows,
/// `#`/`%` comments). Slightly asymmetric input is symmetrized by averaging.
pub fn load_dissimilarity(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dissimilarity(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::format(path, msg),
        other => other,
    })
}

pub fn parse_dissimilarity(text: &str) -> Result<DistanceMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("line {}: bad number {t:?}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let m = rows.len();
    if m < 2 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::invalid("dissimilarity matrix must be square with at least 2 rows"));
    }
    let mut data = vec![0.0; m * m];
    let mut asym = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let (a, b) = (rows[i][j], rows[j][i]);
            if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid(format!("entry ({i}, {j}) is not a nonnegative number")));
            }
            asym = asym.max((a - b).abs());
            data[i * m + j] = 0.5 * (a + b);
        }
    }
    if asym > 0.0 {
        log::warn!("dissimilarity matrix is asymmetric (max gap {asym}); averaged with its transpose");
    }
    DistanceMatrix::new(m, data, 1.0)
}
