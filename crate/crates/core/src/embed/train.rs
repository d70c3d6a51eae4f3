use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{batch_loss, Loss, LossInput};
use super::optim::{Optimizer, OptimizerKind};
use super::{init_embedding, EmbeddingSet, INIT_RADIUS};
use crate::error::{Error, Result};
use crate::manifolds::ManifoldSpec;

mod as_string {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

/// Training recipe; defaults follow the burn-in / plateau schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(with = "as_string")]
    pub loss: Loss,
    #[serde(with = "as_string")]
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_nodes: usize,
    pub burn_in_epochs: usize,
    pub burn_in_factor: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_lr: f64,
    pub seed: u64,
    pub learn_scale: bool,
    pub init_radius: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: Loss::Rsne { temperature: 1.0 },
            optimizer: OptimizerKind::Radam,
            learning_rate: 0.01,
            max_epochs: 3000,
            batch_nodes: 512,
            burn_in_epochs: 10,
            burn_in_factor: 10.0,
            plateau_patience: 50,
            plateau_factor: 10.0,
            min_lr: 1e-5,
            seed: 0,
            learn_scale: false,
            init_radius: INIT_RADIUS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        let positive = [
            ("learning_rate", self.learning_rate),
            ("burn_in_factor", self.burn_in_factor),
            ("plateau_factor", self.plateau_factor),
            ("min_lr", self.min_lr),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.batch_nodes < 2 {
            return Err(Error::invalid("batch_nodes must be at least 2"));
        }
        if !(self.init_radius >= 0.0) {
            return Err(Error::invalid("init_radius must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sum of batch losses over the epoch.
    pub loss: f64,
    /// Learning rate in effect during the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// True if training ended because the learning rate fell below `min_lr`.
    pub converged: bool,
}

impl History {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,loss,lr\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{},{}\n", e.epoch, e.loss, e.lr));
        }
        s
    }
}

/// Train an embedding of `input.distances` on `spec` from a fresh
/// initialization.
pub fn train(input: LossInput<'_>, spec: &ManifoldSpec, cfg: &TrainConfig) -> Result<(EmbeddingSet, History)> {
    cfg.validate()?;
    let m = input.distances.m();
    if let Some(g) = input.graph {
        if g.m() != m {
            return Err(Error::invalid(format!(
                "graph has {} nodes but the distance matrix has {m}",
                g.m()
            )));
        }
    }
    let emb = init_embedding(spec, m, cfg.seed, cfg.init_radius)?;
    train_from(emb, input, cfg)
}

/// Continue training an existing embedding.
pub fn train_from(
    mut emb: EmbeddingSet,
    input: LossInput<'_>,
    cfg: &TrainConfig,
) -> Result<(EmbeddingSet, History)> {
    cfg.validate()?;
    let m = emb.m();
    if input.distances.m() != m {
        return Err(Error::invalid("embedding and distance matrix sizes differ"));
    }
    let mut opt = Optimizer::new(cfg.optimizer, m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..m).collect();
    let mut lr = cfg.learning_rate;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut history = History::default();
    let manifold = emb.manifold.clone();

    for epoch in 0..cfg.max_epochs {
        let eff = if epoch < cfg.burn_in_epochs {
            lr / cfg.burn_in_factor
        } else {
            lr
        };
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_nodes) {
            let ev = batch_loss(cfg.loss, &emb, input, batch)?;
            total += ev.value;
            for (k, &i) in batch.iter().enumerate() {
                let x = &emb.points()[i];
                let rg = manifold.egrad_to_rgrad(x, &ev.egrads[k]);
                let y = opt.step_point(manifold.as_ref(), i, x, &rg, eff)?;
                manifold.check_point(&y).map_err(|e| {
                    Error::Internal(format!("epoch {epoch}: node {i} left the manifold: {e}"))
                })?;
                emb.points_mut()[i] = y;
            }
            if cfg.learn_scale {
                let s = opt.step_scale(emb.log_scale(), ev.d_log_scale, eff);
                if !s.is_finite() {
                    return Err(Error::NumericalDomain("distance scale diverged".into()));
                }
                emb.set_log_scale(s);
            }
        }
        history.epochs.push(EpochRecord {
            epoch,
            loss: total,
            lr: eff,
        });
        log::debug!("epoch {epoch}: loss {total:.6e} lr {eff:.1e}");

        if total < best {
            best = total;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.plateau_patience {
                lr /= cfg.plateau_factor;
                since_best = 0;
                if lr < cfg.min_lr {
                    history.converged = true;
                    break;
                }
            }
        }
    }
    Ok((emb, history))
}
