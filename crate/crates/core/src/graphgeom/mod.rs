//! Discrete curvature of graphs: Gromov δ, Ollivier-Ricci and the
//! parallelogram-law sectional curvature.

mod transport;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphio::{DistanceMatrix, Graph};

pub use transport::transport_cost;

/// Largest graph handled by exhaustive δ enumeration.
pub const DELTA_EXHAUSTIVE_MAX: usize = 60;
/// Default laziness used to approximate the α → 1 limit.
pub const RICCI_ALPHA: f64 = 0.999;

/// Four-point δ of one quadruple: half the gap between the two largest
/// pairing sums.
pub fn quadruple_delta(d: &DistanceMatrix, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let mut s = [
        d.get(i, j) + d.get(k, l),
        d.get(i, k) + d.get(j, l),
        d.get(i, l) + d.get(j, k),
    ];
    s.sort_by(|a, b| b.total_cmp(a));
    ((s[0] - s[1]) / 2.0).max(0.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub samples: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

impl DeltaSummary {
    fn from_samples(samples: Vec<f64>) -> Self {
        let max = samples.iter().cloned().fold(0.0, f64::max);
        let mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
        DeltaSummary { samples, max, mean }
    }
}

/// δ over `n` random quadruples of distinct nodes.
pub fn delta_hyperbolicity(d: &DistanceMatrix, n: usize, seed: u64) -> Result<DeltaSummary> {
    let m = d.m();
    if m < 4 {
        return Err(Error::invalid("δ needs at least 4 nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let q: [usize; 4] = std::array::from_fn(|_| rng.gen_range(0..m));
        if (0..4).any(|a| (a + 1..4).any(|b| q[a] == q[b])) {
            continue;
        }
        samples.push(quadruple_delta(d, q[0], q[1], q[2], q[3]));
    }
    Ok(DeltaSummary::from_samples(samples))
}

/// δ over every quadruple; limited to `DELTA_EXHAUSTIVE_MAX` nodes.
pub fn delta_exhaustive(d: &DistanceMatrix) -> Result<DeltaSummary> {
    let m = d.m();
    if m < 4 {
        return Err(Error::invalid("δ needs at least 4 nodes"));
    }
    if m > DELTA_EXHAUSTIVE_MAX {
        return Err(Error::invalid(format!(
            "exhaustive δ is limited to {DELTA_EXHAUSTIVE_MAX} nodes, got {m}"
        )));
    }
    let samples: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            for j in (i + 1)..m {
                for k in (j + 1)..m {
                    for l in (k + 1)..m {
                        out.push(quadruple_delta(d, i, j, k, l));
                    }
                }
            }
            out
        })
        .collect();
    Ok(DeltaSummary::from_samples(samples))
}

fn require_unweighted(g: &Graph) -> Result<()> {
    if g.is_weighted() {
        return Err(Error::Unsupported("curvature is implemented for unweighted graphs".into()));
    }
    Ok(())
}

/// Hop distance between a neighbor of `x` and a neighbor of `y` for an edge
/// `xy`; it never exceeds 3.
fn local_hops(g: &Graph, a: usize, b: usize) -> f64 {
    if a == b {
        0.0
    } else if g.has_edge(a, b) {
        1.0
    } else {
        let (s, t) = if g.degree(a) <= g.degree(b) { (a, b) } else { (b, a) };
        if g.neighbors(s).iter().any(|&w| g.has_edge(w, t)) {
            2.0
        } else {
            3.0
        }
    }
}

fn lazy_walk(g: &Graph, x: usize, alpha: f64) -> (Vec<usize>, Vec<f64>) {
    let nb = g.neighbors(x);
    let mut nodes = vec![x];
    nodes.extend_from_slice(nb);
    let mut mass = vec![alpha];
    mass.extend(std::iter::repeat((1.0 - alpha) / nb.len() as f64).take(nb.len()));
    (nodes, mass)
}

/// Wasserstein-1 distance between the lazy random-walk measures of the
/// endpoints of edge `xy`.
pub fn edge_transport(g: &Graph, x: usize, y: usize, alpha: f64) -> Result<f64> {
    require_unweighted(g)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("α must lie in [0, 1), got {alpha}")));
    }
    if !g.has_edge(x, y) {
        return Err(Error::invalid(format!("{x}–{y} is not an edge")));
    }
    let (sx, mx) = lazy_walk(g, x, alpha);
    let (sy, my) = lazy_walk(g, y, alpha);
    let cost: Vec<Vec<f64>> = sx
        .iter()
        .map(|&a| sy.iter().map(|&b| local_hops(g, a, b)).collect())
        .collect();
    transport_cost(&mx, &my, &cost)
}

/// `(1 − W(m_x, m_y)) / (1 − α)`: the Ollivier curvature `Ric_α` scaled so
/// that α close to 1 approximates the limiting curvature. At α = 0 this is
/// the plain `Ric₁`.
pub fn ollivier_ricci_edge(g: &Graph, x: usize, y: usize, alpha: f64) -> Result<f64> {
    Ok((1.0 - edge_transport(g, x, y, alpha)?) / (1.0 - alpha))
}

/// Curvature of every edge `(u, v)` with `u < v`.
pub fn ricci_edges(g: &Graph, alpha: f64) -> Result<Vec<(usize, usize, f64)>> {
    let edges: Vec<(usize, usize)> = g.edges().collect();
    edges
        .par_iter()
        .map(|&(u, v)| Ok((u, v, ollivier_ricci_edge(g, u, v, alpha)?)))
        .collect()
}

/// Mean curvature of each node's incident edges (NaN for isolated nodes).
pub fn ricci_nodes(m: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut sum = vec![0.0; m];
    let mut cnt = vec![0usize; m];
    for &(u, v, r) in edges {
        for w in [u, v] {
            sum[w] += r;
            cnt[w] += 1;
        }
    }
    sum.iter()
        .zip(&cnt)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect()
}

/// Parallelogram-law deviation at `m_node` for its neighbors `y`, `z`,
/// averaged over every reference node `x ≠ m_node`.
pub fn graph_sectional(g: &Graph, d: &DistanceMatrix, m_node: usize, y: usize, z: usize) -> Result<f64> {
    if y == z || !g.has_edge(m_node, y) || !g.has_edge(m_node, z) {
        return Err(Error::invalid(format!(
            "{y} and {z} must be distinct neighbors of {m_node}"
        )));
    }
    let dyz = d.get(y, z);
    let mut s = 0.0;
    for x in (0..d.m()).filter(|&x| x != m_node) {
        let dxm = d.get(x, m_node);
        let k = dxm * dxm + dyz * dyz / 4.0 - (d.get(x, y).powi(2) + d.get(x, z).powi(2)) / 2.0;
        s += k / (2.0 * dxm);
    }
    Ok(s / (d.m() - 1) as f64)
}

/// `n` samples of the sectional curvature at random nodes of degree ≥ 2 and
/// random pairs of their neighbors.
pub fn sectional_samples(g: &Graph, d: &DistanceMatrix, n: usize, seed: u64) -> Result<Vec<f64>> {
    let eligible: Vec<usize> = (0..g.m()).filter(|&u| g.degree(u) >= 2).collect();
    if eligible.is_empty() {
        return Err(Error::invalid("no node has two neighbors"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<(usize, usize, usize)> = (0..n)
        .map(|_| {
            let m = eligible[rng.gen_range(0..eligible.len())];
            let nb = g.neighbors(m);
            let a = rng.gen_range(0..nb.len());
            let mut b = rng.gen_range(0..nb.len() - 1);
            if b >= a {
                b += 1;
            }
            (m, nb[a], nb[b])
        })
        .collect();
    triples
        .par_iter()
        .map(|&(m, y, z)| graph_sectional(g, d, m, y, z))
        .collect()
}

/// Every `(m; y, z)` with `y < z`.
pub fn sectional_all(g: &Graph, d: &DistanceMatrix) -> Result<Vec<f64>> {
    let mut triples = Vec::new();
    for m in 0..g.m() {
        let nb = g.neighbors(m);
        for a in 0..nb.len() {
            for b in (a + 1)..nb.len() {
                triples.push((m, nb[a], nb[b]));
            }
        }
    }
    triples
        .par_iter()
        .map(|&(m, y, z)| graph_sectional(g, d, m, y, z))
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct CurvatureOptions {
    pub n_quadruples: usize,
    pub n_sectional: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        CurvatureOptions {
            n_quadruples: 1_000_000,
            n_sectional: 10_000,
            alpha: RICCI_ALPHA,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub delta: DeltaSummary,
    pub delta_exhaustive: bool,
    pub ricci_edges: Vec<(usize, usize, f64)>,
    pub ricci_nodes: Vec<f64>,
    pub sectional_samples: Vec<f64>,
}

impl CurvatureReport {
    /// `d` holds unscaled hop distances of `g`.
    pub fn compute(g: &Graph, d: &DistanceMatrix, opts: &CurvatureOptions) -> Result<Self> {
        let exhaustive = d.m() <= DELTA_EXHAUSTIVE_MAX;
        let delta = if exhaustive {
            delta_exhaustive(d)?
        } else {
            delta_hyperbolicity(d, opts.n_quadruples, opts.seed)?
        };
        let ricci_edges = ricci_edges(g, opts.alpha)?;
        let ricci_nodes = ricci_nodes(g.m(), &ricci_edges);
        let sectional_samples = sectional_samples(g, d, opts.n_sectional, opts.seed)?;
        Ok(CurvatureReport {
            delta,
            delta_exhaustive: exhaustive,
            ricci_edges,
            ricci_nodes,
            sectional_samples,
        })
    }

    pub fn ricci_edges_csv(&self) -> String {
        let mut s = String::from("u,v,ricci\n");
        for (u, v, r) in &self.ricci_edges {
            s.push_str(&format!("{u},{v},{r}\n"));
        }
        s
    }

    pub fn ricci_nodes_csv(&self) -> String {
        let mut s = String::from("node,mean_ricci\n");
        for (u, r) in self.ricci_nodes.iter().enumerate() {
            s.push_str(&format!("{u},{r}\n"));
        }
        s
    }
}
