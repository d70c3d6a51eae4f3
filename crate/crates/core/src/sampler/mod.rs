//! Random point clouds on manifolds and their threshold graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgeom::sectional_samples;
use crate::graphio::{apsp, DistanceMatrix, Graph};
use crate::manifolds::{orthonormalize_columns, random_tangent_in_ball, Manifold, ManifoldSpec};
use crate::matrix::Matrix;

/// Smallest largest-component size for which sectional curvature is sampled.
pub const MIN_COMPONENT_FOR_CURVATURE: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleMethod {
    UniformCompact,
    ExpBall { radius: f64 },
}

#[derive(Clone, Debug)]
pub struct SampleCloud {
    pub spec: ManifoldSpec,
    pub points: Vec<Matrix>,
    pub method: SampleMethod,
}

impl SampleCloud {
    pub fn manifold(&self) -> Result<Box<dyn Manifold>> {
        self.spec.build()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Independent stream per point so results do not depend on scheduling.
fn point_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn uniform_point(spec: &ManifoldSpec, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    match *spec {
        ManifoldSpec::Sphere(n) => loop {
            let g = gaussian(rng, n + 1, 1);
            let norm = g.norm();
            if norm > 1e-12 {
                return Ok(g.scale(1.0 / norm));
            }
        },
        ManifoldSpec::Grassmann { k, n } => orthonormalize_columns(&gaussian(rng, n, k)),
        ManifoldSpec::SpecialOrthogonal(n) => {
            let mut q = orthonormalize_columns(&gaussian(rng, n, n))?;
            if q.det() < 0.0 {
                for i in 0..n {
                    q[(i, 0)] = -q[(i, 0)];
                }
            }
            Ok(q)
        }
        _ => Err(Error::invalid(format!(
            "uniform sampling needs a sphere, Grassmann or rotation group, got {spec}"
        ))),
    }
}

/// Haar-distributed points on a compact manifold.
pub fn sample_uniform(spec: &ManifoldSpec, count: usize, seed: u64) -> Result<SampleCloud> {
    let points = (0..count)
        .into_par_iter()
        .map(|i| uniform_point(spec, &mut point_rng(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleCloud {
        spec: spec.clone(),
        points,
        method: SampleMethod::UniformCompact,
    })
}

/// `exp_base(v)` with `v` uniform in the Riemannian ball of the given radius
/// in the tangent space at `base` (the canonical base point if `None`).
pub fn sample_exp_ball(
    spec: &ManifoldSpec,
    base: Option<&Matrix>,
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<SampleCloud> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("radius must be nonnegative, got {radius}")));
    }
    let m = spec.build()?;
    let base = match base {
        Some(b) => {
            m.check_point(b)?;
            b.clone()
        }
        None => m.base_point(),
    };
    let points = (0..count)
        .into_par_iter()
        .map(|i| {
            let v = random_tangent_in_ball(m.as_ref(), &base, radius, &mut point_rng(seed, i))?;
            m.exp(&base, &v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleCloud {
        spec: spec.clone(),
        points,
        method: SampleMethod::ExpBall { radius },
    })
}

/// Geodesic distances between all points of a cloud.
pub fn pairwise_distances(cloud: &SampleCloud) -> Result<DistanceMatrix> {
    let m = cloud.manifold()?;
    let n = cloud.len();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| m.distance(&cloud.points[i], &cloud.points[j]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, d) in row.into_iter().enumerate() {
            data[i * n + i + 1 + k] = d;
            data[(i + 1 + k) * n + i] = d;
        }
    }
    DistanceMatrix::new(n, data, 1.0)
}

/// Edge between every pair strictly closer than `tau`.
pub fn threshold_graph_from(d: &DistanceMatrix, tau: f64) -> Result<Graph> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("threshold must be positive, got {tau}")));
    }
    let n = d.m();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if d.get(i, j) < tau {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

pub fn threshold_graph(cloud: &SampleCloud, tau: f64) -> Result<Graph> {
    threshold_graph_from(&pairwise_distances(cloud)?, tau)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn threshold_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) || !(lo > 0.0) {
        return Err(Error::invalid("threshold grid needs 0 < lo < hi and n ≥ 2"));
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn quartiles(mut v: Vec<f64>) -> [f64; 3] {
    v.sort_by(f64::total_cmp);
    [quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75)]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub degree: [f64; 3],
    /// Absent when the largest component is too small to sample.
    pub curvature: Option<[f64; 3]>,
    pub largest_component: usize,
    /// No edges at this threshold.
    pub empty: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub rows: Vec<SweepRow>,
}

impl ThresholdSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "threshold,degree_q25,degree_q50,degree_q75,curv_q25,curv_q50,curv_q75,largest_component\n",
        );
        for r in &self.rows {
            let curv = match r.curvature {
                Some(c) => format!("{},{},{}", c[0], c[1], c[2]),
                None => "NA,NA,NA".to_string(),
            };
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.threshold, r.degree[0], r.degree[1], r.degree[2], curv, r.largest_component
            ));
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    /// Sectional-curvature samples per threshold.
    pub n_sectional: usize,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            n_sectional: 1000,
            seed: 0,
        }
    }
}

/// Degree and sectional-curvature quartiles of the threshold graph at each
/// threshold. Empty graphs are kept as rows flagged `empty` without
/// curvature.
pub fn sweep_distances(d: &DistanceMatrix, thresholds: &[f64], opts: &SweepOptions) -> Result<ThresholdSweep> {
    if thresholds.len() < 2 {
        return Err(Error::invalid("a sweep needs at least two thresholds"));
    }
    let mut rows = Vec::with_capacity(thresholds.len());
    for &tau in thresholds {
        let g = threshold_graph_from(d, tau)?;
        let degree = quartiles((0..g.m()).map(|u| g.degree(u) as f64).collect());
        let comp = g.largest_component();
        let empty = g.edge_count() == 0;
        let curvature = if !empty && comp.m() >= MIN_COMPONENT_FOR_CURVATURE {
            let hops = apsp(&comp)?;
            Some(quartiles(sectional_samples(&comp, &hops, opts.n_sectional, opts.seed)?))
        } else {
            None
        };
        rows.push(SweepRow {
            threshold: tau,
            degree,
            curvature,
            largest_component: comp.m(),
            empty,
        });
    }
    Ok(ThresholdSweep { rows })
}

pub fn sweep(cloud: &SampleCloud, thresholds: &[f64], opts: &SweepOptions) -> Result<ThresholdSweep> {
    sweep_distances(&pairwise_distances(cloud)?, thresholds, opts)
}

/// Default grid: `d_max/10 … d_max` for uniform clouds, `R/10 … 1.5R` for
/// exp-map balls of radius `R`.
pub fn default_thresholds(cloud: &SampleCloud, d: &DistanceMatrix, n: usize) -> Result<Vec<f64>> {
    match cloud.method {
        SampleMethod::UniformCompact => threshold_grid(d.max() / 10.0, d.max(), n),
        SampleMethod::ExpBall { radius } => threshold_grid(radius / 10.0, 1.5 * radius, n),
    }
}
