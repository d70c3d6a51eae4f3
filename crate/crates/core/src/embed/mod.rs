//! Losses, Riemannian optimizers and the training loop.

mod checkpoint;
mod loss;
mod optim;
mod train;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifolds::{random_tangent_in_ball, Manifold, ManifoldSpec};
use crate::matrix::Matrix;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use loss::{batch_loss, rsne_target_row, BatchEval, Loss, LossInput, PairTable};
pub use optim::{Optimizer, OptimizerKind, BETA1, BETA2, EPSILON};
pub use train::{train, train_from, EpochRecord, History, TrainConfig};

/// Default radius of the tangent ball used for initialization.
pub const INIT_RADIUS: f64 = 0.1;

/// Node embeddings on one manifold, plus a positive distance scale
/// `s = exp(σ)` applied to every model distance.
#[derive(Clone, Debug)]
pub struct EmbeddingSet {
    manifold: Arc<dyn Manifold>,
    points: Vec<Matrix>,
    log_scale: f64,
}

impl EmbeddingSet {
    pub fn new(spec: &ManifoldSpec, points: Vec<Matrix>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid(format!("scale must be positive, got {scale}")));
        }
        let manifold: Arc<dyn Manifold> = Arc::from(spec.build()?);
        for (i, p) in points.iter().enumerate() {
            manifold
                .check_point(p)
                .map_err(|e| Error::invalid(format!("point {i}: {e}")))?;
        }
        Ok(EmbeddingSet {
            manifold,
            points,
            log_scale: scale.ln(),
        })
    }

    pub fn spec(&self) -> &ManifoldSpec {
        self.manifold.spec()
    }

    pub fn manifold(&self) -> &dyn Manifold {
        self.manifold.as_ref()
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Matrix] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Matrix {
        &self.points[i]
    }

    pub(crate) fn points_mut(&mut self) -> &mut [Matrix] {
        &mut self.points
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub(crate) fn set_log_scale(&mut self, s: f64) {
        self.log_scale = s;
    }

    /// Squared model dissimilarity `s² · d²` (Stein divergence for `stein:n`).
    pub fn model_sq_distance(&self, i: usize, j: usize) -> Result<f64> {
        let d2 = self
            .manifold
            .model_sq_distance(&self.points[i], &self.points[j])?;
        Ok(self.scale().powi(2) * d2)
    }

    /// Model distance `s · d` (or `s · √S` for Stein).
    pub fn model_distance(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.model_sq_distance(i, j)?.sqrt())
    }

    /// Row `i` of the model distance matrix.
    pub fn model_distance_row(&self, i: usize) -> Result<Vec<f64>> {
        (0..self.m()).map(|j| if i == j { Ok(0.0) } else { self.model_distance(i, j) }).collect()
    }
}

/// `m` points `exp(base, v)` with `v` uniform in the tangent ball of the given
/// radius at the manifold's base point; bit-identical for a fixed seed.
pub fn init_embedding(spec: &ManifoldSpec, m: usize, seed: u64, radius: f64) -> Result<EmbeddingSet> {
    let manifold: Arc<dyn Manifold> = Arc::from(spec.build()?);
    let base = manifold.base_point();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..m)
        .map(|_| {
            let v = random_tangent_in_ball(manifold.as_ref(), &base, radius, &mut rng)?;
            manifold.exp(&base, &v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingSet {
        manifold,
        points,
        log_scale: 0.0,
    })
}
