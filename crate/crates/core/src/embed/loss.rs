use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::EmbeddingSet;
use crate::error::{Error, Result};
use crate::graphio::{DistanceMatrix, Graph};
use crate::matrix::Matrix;

/// Ratio deviations below this count as the distortion kink.
pub const KINK_TOL: f64 = 1e-12;
/// Model distances below this are treated as coincident points.
const COINCIDENT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Loss {
    /// Softmax over graph neighbors of the negated model distance.
    Neighborhood,
    /// Σ (d_G − d_M)².
    Stress,
    /// Σ |d_M² / d_G² − 1|.
    Distortion,
    /// Σ_i KL(p_i ‖ q_i) with p ∝ exp(−d_G²/T), q ∝ exp(−d_M²).
    Rsne { temperature: f64 },
}

impl Loss {
    pub fn validate(&self) -> Result<()> {
        match self {
            Loss::Rsne { temperature } if !(*temperature > 0.0) || !temperature.is_finite() => {
                Err(Error::invalid(format!("RSNE temperature must be positive, got {temperature}")))
            }
            _ => Ok(()),
        }
    }

    pub fn needs_graph(&self) -> bool {
        matches!(self, Loss::Neighborhood)
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::Neighborhood => f.write_str("neighborhood"),
            Loss::Stress => f.write_str("stress"),
            Loss::Distortion => f.write_str("distortion"),
            Loss::Rsne { temperature } => write!(f, "rsne:{temperature}"),
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let loss = match (name.to_ascii_lowercase().as_str(), arg) {
            ("neighborhood" | "neigh", None) => Loss::Neighborhood,
            ("stress", None) => Loss::Stress,
            ("distortion", None) => Loss::Distortion,
            ("rsne" | "sne", Some(t)) => Loss::Rsne {
                temperature: t
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad RSNE temperature {t:?}")))?,
            },
            ("rsne" | "sne", None) => {
                return Err(Error::invalid("rsne needs a temperature, e.g. rsne:1"))
            }
            _ => return Err(Error::invalid(format!("unknown loss {s:?}"))),
        };
        loss.validate()?;
        Ok(loss)
    }
}

/// Ground truth the losses compare against.
#[derive(Clone, Copy)]
pub struct LossInput<'a> {
    /// Adjacency; required by the neighborhood loss only.
    pub graph: Option<&'a Graph>,
    /// Max-scaled target distances.
    pub distances: &'a DistanceMatrix,
}

/// Squared model dissimilarities `D = s²·d²` between all batch pairs, with
/// the gradients of the unscaled `d²` in both arguments.
pub struct PairTable {
    n: usize,
    dsq: Vec<f64>,
    /// `grads[a][b − a − 1]` holds `(∂d²/∂y_a, ∂d²/∂y_b)` for `a < b`.
    grads: Vec<Vec<(Matrix, Matrix)>>,
    scale_sq: f64,
}

impl PairTable {
    pub fn compute(emb: &EmbeddingSet, batch: &[usize]) -> Result<PairTable> {
        let n = batch.len();
        let m = emb.manifold();
        let scale_sq = emb.scale().powi(2);
        let rows = (0..n)
            .into_par_iter()
            .map(|a| {
                ((a + 1)..n)
                    .map(|b| {
                        let g = m.model_sq_distance_grad(emb.point(batch[a]), emb.point(batch[b]))?;
                        if !g.value.is_finite() {
                            return Err(Error::NumericalDomain(format!(
                                "non-finite model distance between nodes {} and {}",
                                batch[a], batch[b]
                            )));
                        }
                        Ok(g)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut dsq = vec![0.0; n * n];
        let mut grads = Vec::with_capacity(n);
        for (a, row) in rows.into_iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (k, g) in row.into_iter().enumerate() {
                let b = a + 1 + k;
                let v = scale_sq * g.value;
                dsq[a * n + b] = v;
                dsq[b * n + a] = v;
                out.push((g.grad_x, g.grad_y));
            }
            grads.push(out);
        }
        Ok(PairTable {
            n,
            dsq,
            grads,
            scale_sq,
        })
    }

    #[inline]
    pub fn dsq(&self, a: usize, b: usize) -> f64 {
        self.dsq[a * self.n + b]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Loss value on a batch with Euclidean gradients for each batch node and
/// the derivative with respect to the log-scale σ.
#[derive(Clone, Debug)]
pub struct BatchEval {
    pub value: f64,
    pub egrads: Vec<Matrix>,
    pub d_log_scale: f64,
}

/// Evaluate `loss` on all within-batch pairs.
pub fn batch_loss(loss: Loss, emb: &EmbeddingSet, input: LossInput<'_>, batch: &[usize]) -> Result<BatchEval> {
    loss.validate()?;
    let table = PairTable::compute(emb, batch)?;
    let n = batch.len();
    let mut coef = vec![0.0; n * n];
    let value = match loss {
        Loss::Stress => stress(&table, input.distances, batch, &mut coef),
        Loss::Distortion => distortion(&table, input.distances, batch, &mut coef)?,
        Loss::Rsne { temperature } => rsne(&table, input.distances, batch, temperature, &mut coef),
        Loss::Neighborhood => {
            let g = input.graph.ok_or_else(|| {
                Error::Unsupported("the neighborhood loss needs graph adjacency".into())
            })?;
            neighborhood(&table, g, batch, &mut coef)?
        }
    };
    if !value.is_finite() {
        return Err(Error::NumericalDomain(format!("{loss} loss is not finite")));
    }

    // Scatter c_ab · ∂D/∂y in a fixed order per node so results do not depend
    // on the thread count.
    let s2 = table.scale_sq;
    let shape = emb.manifold().point_shape();
    let egrads: Vec<Matrix> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut g = Matrix::zeros(shape.0, shape.1);
            for b in 0..n {
                let c = coef[a * n + b];
                if b == a || c == 0.0 {
                    continue;
                }
                let part = if a < b {
                    &table.grads[a][b - a - 1].0
                } else {
                    &table.grads[b][a - b - 1].1
                };
                g.axpy(c * s2, part);
            }
            g
        })
        .collect();
    let mut d_log_scale = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            d_log_scale += coef[a * n + b] * 2.0 * table.dsq(a, b);
        }
    }
    Ok(BatchEval {
        value,
        egrads,
        d_log_scale,
    })
}

/// Adds `c` to the symmetric coefficient of the unordered pair.
#[inline]
fn add(coef: &mut [f64], n: usize, a: usize, b: usize, c: f64) {
    coef[a * n + b] += c;
    coef[b * n + a] += c;
}

fn stress(t: &PairTable, d: &DistanceMatrix, batch: &[usize], coef: &mut [f64]) -> f64 {
    let n = t.len();
    let mut value = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let dg = d.get(batch[a], batch[b]);
            let dm = t.dsq(a, b).sqrt();
            value += (dg - dm).powi(2);
            // ∂/∂D (d_G − √D)² = (√D − d_G)/√D
            if dm > COINCIDENT {
                add(coef, n, a, b, (dm - dg) / dm);
            }
        }
    }
    value
}

fn distortion(t: &PairTable, d: &DistanceMatrix, batch: &[usize], coef: &mut [f64]) -> Result<f64> {
    let n = t.len();
    let mut value = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let dg = d.get(batch[a], batch[b]);
            if !(dg > 0.0) {
                return Err(Error::invalid(format!(
                    "distortion loss needs positive target distances; nodes {} and {} are at 0",
                    batch[a], batch[b]
                )));
            }
            let dg2 = dg * dg;
            let r = t.dsq(a, b) / dg2 - 1.0;
            value += r.abs();
            if r.abs() >= KINK_TOL {
                add(coef, n, a, b, r.signum() / dg2);
            }
        }
    }
    Ok(value)
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Target distribution `p_a·` of the batch node at position `a`, indexed by
/// batch position (entry `a` is 0).
pub fn rsne_target_row(d: &DistanceMatrix, batch: &[usize], a: usize, temperature: f64) -> Vec<f64> {
    let logits: Vec<f64> = batch
        .iter()
        .map(|&v| -d.get(batch[a], v).powi(2) / temperature)
        .collect();
    let others = (0..batch.len()).filter(|&b| b != a);
    let z = log_sum_exp(others.map(|b| logits[b]));
    (0..batch.len())
        .map(|b| if b == a { 0.0 } else { (logits[b] - z).exp() })
        .collect()
}

fn rsne(t: &PairTable, d: &DistanceMatrix, batch: &[usize], temp: f64, coef: &mut [f64]) -> f64 {
    let n = t.len();
    let mut value = 0.0;
    let mut lp = vec![0.0; n];
    let mut lq = vec![0.0; n];
    for a in 0..n {
        if n < 2 {
            break;
        }
        for b in 0..n {
            if b != a {
                lp[b] = -d.get(batch[a], batch[b]).powi(2) / temp;
                lq[b] = -t.dsq(a, b);
            }
        }
        let others = (0..n).filter(move |&b| b != a);
        let zp = log_sum_exp(others.clone().map(|b| lp[b]));
        let zq = log_sum_exp(others.clone().map(|b| lq[b]));
        for b in others {
            let (log_p, log_q) = (lp[b] - zp, lq[b] - zq);
            let p = log_p.exp();
            if p > 0.0 {
                value += p * (log_p - log_q);
            }
            // ∂KL(p_a‖q_a)/∂D_ab = p_ab − q_ab
            add(coef, n, a, b, p - log_q.exp());
        }
    }
    value
}

fn neighborhood(t: &PairTable, g: &Graph, batch: &[usize], coef: &mut [f64]) -> Result<f64> {
    if g.is_weighted() {
        return Err(Error::Unsupported("the neighborhood loss needs an unweighted graph".into()));
    }
    let n = t.len();
    let mut pos = std::collections::HashMap::with_capacity(n);
    for (a, &u) in batch.iter().enumerate() {
        if g.degree(u) == 0 {
            return Err(Error::invalid(format!("node {u} is isolated")));
        }
        pos.insert(u, a);
    }
    let mut value = 0.0;
    let mut nbrs: Vec<usize> = Vec::new();
    for (a, &u) in batch.iter().enumerate() {
        nbrs.clear();
        nbrs.extend(g.neighbors(u).iter().filter_map(|v| pos.get(v).copied()));
        if nbrs.is_empty() {
            continue;
        }
        let dist: Vec<f64> = nbrs.iter().map(|&b| t.dsq(a, b).sqrt()).collect();
        let lse = log_sum_exp(dist.iter().map(|d| -d));
        let k = nbrs.len() as f64;
        // Σ_j [d_aj + log Σ_k exp(−d_ak)] over the batch neighbors j of a.
        value += dist.iter().sum::<f64>() + k * lse;
        for (i, &b) in nbrs.iter().enumerate() {
            let dd = 1.0 - k * (-dist[i] - lse).exp();
            // ∂d/∂D = 1/(2d)
            if dist[i] > COINCIDENT {
                add(coef, n, a, b, dd / (2.0 * dist[i]));
            }
        }
    }
    Ok(value)
}
