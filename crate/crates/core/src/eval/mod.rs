//! Reconstruction metrics and the sum-of-angles curvature profile.

mod angles;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingSet;
use crate::error::{Error, Result};
use crate::graphio::{bfs_hops, DistanceMatrix, Graph};

pub use angles::{angle_sum_profile, angle_sums, triangle_angle_sum, Histogram};

/// Model distances closer than this are ties (and, to the source, coincident).
pub const TIE_TOL: f64 = 1e-12;

/// All pairwise model distances `s·d` of an embedding.
pub fn model_distance_matrix(emb: &EmbeddingSet) -> Result<DistanceMatrix> {
    let m = emb.m();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..m)
                .map(|j| emb.model_distance(i, j))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; m * m];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, d) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            if !d.is_finite() {
                return Err(Error::NumericalDomain(format!("distance {i}–{j} is not finite")));
            }
            data[i * m + j] = d;
            data[j * m + i] = d;
        }
    }
    DistanceMatrix::new(m, data, emb.scale())
}

/// `F₁(k)` for `k = 1..diameter`, with the number of (source, target) pairs
/// on each layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Curve {
    /// `values[k − 1] = F₁(k)`.
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

impl F1Curve {
    pub fn f1_at(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,f1,count\n");
        for (i, (f, c)) in self.values.iter().zip(&self.counts).enumerate() {
            s.push_str(&format!("{},{},{}\n", i + 1, f, c));
        }
        s
    }
}

fn graph_hops(g: &Graph, m: usize) -> Result<Vec<Vec<u32>>> {
    if g.is_weighted() {
        return Err(Error::Unsupported("ranking metrics need an unweighted graph".into()));
    }
    if g.m() != m {
        return Err(Error::invalid(format!(
            "graph has {} nodes, embedding has {m}",
            g.m()
        )));
    }
    (0..m)
        .into_par_iter()
        .map(|u| {
            let h = bfs_hops(g, u);
            match h.iter().position(|&x| x == u32::MAX) {
                Some(v) => Err(Error::Disconnected(u, v)),
                None => Ok(h),
            }
        })
        .collect()
}

/// Fenwick tree over hop counts.
struct Fenwick(Vec<usize>);

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick(vec![0; n + 1])
    }

    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.0.len() {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted keys `≤ i`.
    fn prefix(&self, i: usize) -> usize {
        let mut i = (i + 1).min(self.0.len() - 1);
        let mut s = 0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// F1@k from precomputed model distances.
///
/// Balls are inclusive: `B_G(v;u)` holds every `w ≠ u` with
/// `d_G(u,w) ≤ d_G(u,v)`, `B_M(v;u)` every `w ≠ u` with
/// `d_M(u,w) ≤ d_M(u,v) + TIE_TOL`, minus nodes coincident with `u`.
/// An empty `B_M` scores 0.
pub fn f1_curve_from_distances(g: &Graph, model: &DistanceMatrix) -> Result<F1Curve> {
    let m = model.m();
    let hops = graph_hops(g, m)?;
    let diam = hops.iter().flatten().copied().max().unwrap_or(0) as usize;
    let per_source: Vec<(Vec<f64>, Vec<usize>)> = (0..m)
        .into_par_iter()
        .map(|u| {
            let h = &hops[u];
            let row = model.row(u);
            let mut layer_size = vec![0usize; diam + 1];
            for (w, &k) in h.iter().enumerate() {
                if w != u {
                    layer_size[k as usize] += 1;
                }
            }
            // |B_G| for a node on layer k
            let mut cum = vec![0usize; diam + 1];
            for k in 1..=diam {
                cum[k] = cum[k - 1] + layer_size[k];
            }

            let mut order: Vec<usize> = (0..m).filter(|&w| w != u).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            let first = order.partition_point(|&w| row[w] < TIE_TOL);
            let mut tree = Fenwick::new(diam + 1);
            let mut end = first;
            let mut sums = vec![0.0; diam];
            for (pos, &v) in order.iter().enumerate() {
                if pos < first {
                    continue; // coincident with u: empty model ball
                }
                while end < order.len() && row[order[end]] <= row[v] + TIE_TOL {
                    tree.add(h[order[end]] as usize);
                    end += 1;
                }
                let k = h[v] as usize;
                let tp = tree.prefix(k) as f64;
                let p = tp / (end - first) as f64;
                let r = tp / cum[k] as f64;
                if tp > 0.0 {
                    sums[k - 1] += 2.0 * p * r / (p + r);
                }
            }
            (sums, layer_size[1..].to_vec())
        })
        .collect();
    let mut values = vec![0.0; diam];
    let mut counts = vec![0usize; diam];
    for (sums, sizes) in per_source {
        for k in 0..diam {
            values[k] += sums[k];
            counts[k] += sizes[k];
        }
    }
    for k in 0..diam {
        values[k] /= counts[k] as f64;
    }
    Ok(F1Curve { values, counts })
}

pub fn f1_at_k(g: &Graph, emb: &EmbeddingSet) -> Result<F1Curve> {
    f1_curve_from_distances(g, &model_distance_matrix(emb)?)
}

/// Layer-count-weighted mean of the F1@k curve.
pub fn auc_f1(curve: &F1Curve) -> Result<f64> {
    let total: usize = curve.counts.iter().sum();
    if curve.values.is_empty() || total == 0 {
        return Err(Error::invalid("empty F1 curve"));
    }
    let s: f64 = curve
        .values
        .iter()
        .zip(&curve.counts)
        .map(|(f, &c)| f * c as f64)
        .sum();
    Ok(s / total as f64)
}

/// For each node and each graph neighbor `v`, the fraction of neighbors in
/// the smallest model ball around the node that contains `v`; averaged over
/// neighbors, then nodes.
pub fn map_from_distances(g: &Graph, model: &DistanceMatrix) -> Result<f64> {
    let m = model.m();
    if g.is_weighted() {
        return Err(Error::Unsupported("mAP needs an unweighted graph".into()));
    }
    if g.m() != m {
        return Err(Error::invalid("graph and embedding sizes differ"));
    }
    let per_node: Vec<Option<f64>> = (0..m)
        .into_par_iter()
        .map(|u| {
            let nb = g.neighbors(u);
            if nb.is_empty() {
                return None;
            }
            let row = model.row(u);
            let mut ds: Vec<(f64, bool)> = (0..m)
                .filter(|&w| w != u)
                .map(|w| (row[w], g.has_edge(u, w)))
                .collect();
            ds.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut ap = 0.0;
            let (mut end, mut hits) = (0, 0usize);
            let mut nd: Vec<f64> = nb.iter().map(|&v| row[v]).collect();
            nd.sort_by(f64::total_cmp);
            for d in nd {
                while end < ds.len() && ds[end].0 <= d + TIE_TOL {
                    hits += ds[end].1 as usize;
                    end += 1;
                }
                ap += hits as f64 / end as f64;
            }
            Some(ap / nb.len() as f64)
        })
        .collect();
    let vals: Vec<f64> = per_node.into_iter().flatten().collect();
    if vals.is_empty() {
        return Err(Error::invalid("graph has no edges"));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn mean_average_precision(g: &Graph, emb: &EmbeddingSet) -> Result<f64> {
    map_from_distances(g, &model_distance_matrix(emb)?)
}

/// Mean over pairs with `d_G > 0` of `|d̂_M − d̂_G| / d̂_G`, both matrices
/// divided by their maxima. An all-zero model matrix scores 1.
pub fn distortion_from_distances(d: &DistanceMatrix, model: &DistanceMatrix) -> Result<f64> {
    let m = d.m();
    if model.m() != m {
        return Err(Error::invalid(format!(
            "target has {m} nodes, embedding has {}",
            model.m()
        )));
    }
    let (gmax, mmax) = (d.max(), model.max());
    if !(gmax > 0.0) {
        return Err(Error::invalid("target distances are all zero"));
    }
    let (mut s, mut n) = (0.0, 0usize);
    for i in 0..m {
        for j in (i + 1)..m {
            let dg = d.get(i, j) / gmax;
            if dg > 0.0 {
                let dm = if mmax > 0.0 { model.get(i, j) / mmax } else { 0.0 };
                s += (dm - dg).abs() / dg;
                n += 1;
            }
        }
    }
    Ok(s / n as f64)
}

pub fn average_distortion(d: &DistanceMatrix, emb: &EmbeddingSet) -> Result<f64> {
    distortion_from_distances(d, &model_distance_matrix(emb)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Ranking metrics are absent for dissimilarity inputs without adjacency.
    pub f1_curve: Option<F1Curve>,
    pub f1_at_1: Option<f64>,
    pub auc: Option<f64>,
    pub map: Option<f64>,
    pub avg_distortion: f64,
    pub angle_histogram: Option<Histogram>,
}

impl MetricsReport {
    /// All metrics from one model distance matrix.
    pub fn compute(graph: Option<&Graph>, d: &DistanceMatrix, emb: &EmbeddingSet) -> Result<Self> {
        let model = model_distance_matrix(emb)?;
        let avg_distortion = distortion_from_distances(d, &model)?;
        let (f1_curve, f1_at_1, auc, map) = match graph {
            Some(g) => {
                let c = f1_curve_from_distances(g, &model)?;
                let auc = auc_f1(&c)?;
                let map = map_from_distances(g, &model)?;
                (Some(c.clone()), c.f1_at(1), Some(auc), Some(map))
            }
            None => (None, None, None, None),
        };
        Ok(MetricsReport {
            f1_curve,
            f1_at_1,
            auc,
            map,
            avg_distortion,
            angle_histogram: None,
        })
    }
}
